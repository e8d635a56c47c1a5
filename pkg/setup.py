from setuptools import setup, find_packages

setup(
    name="flimks",
    version="0.1.0",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    package_data={
        "flimks": ["flimks_hints.md"]
    },
    include_package_data=True,
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.9",
        "mcp>=1.2.0,<2"
    ],
    extras_require={
        "test": ["pytest>=7.0", "hypothesis>=6.0"]
    },
    entry_points={
        "console_scripts": [
            "flimks=flimks.cli:main",
            "flimks-server=flimks.server:run_mcp_server"
        ]
    },
    python_requires=">=3.9",
)
