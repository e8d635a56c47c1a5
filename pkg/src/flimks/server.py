"""MCP tool server for the flimks simulator and certifier."""
import logging
import os

from mcp.server.fastmcp.server import FastMCP

from .feasibility import classify_regime, select_params
from .operators import GridSpec, certify_subsolution
from .problem import make_setup
from .solver import InitSpec, SolverConfig, build_initial_state, make_grid, run

logger = logging.getLogger(__name__)


class FlimksExtension(FastMCP):
    """Flux-limited Keller-Segel tools."""

    def __init__(self):
        """Initialize the extension."""
        hints_path = os.path.join(os.path.dirname(__file__), 'flimks_hints.md')
        with open(hints_path, 'r') as f:
            hints_content = f.read()

        instructions = f"""Flux-limited Keller-Segel blow-up tools.

Follow these usage notes when choosing parameters and reading results:

{hints_content}
"""
        super().__init__(name="flimks", instructions=instructions)
        self._setup_tools()

    def _setup_tools(self):
        """Set up the extension's tools."""
        @self.tool("flimks_select_params")
        async def select(n: int, R: float, chi: float, m: float) -> dict:
            """Select subsolution parameters and report every construction constraint."""
            try:
                report = select_params(make_setup(n, R, chi, m))
                return {"success": True, **report.to_dict()}
            except Exception as e:
                logger.error(f"Parameter selection failed: {str(e)}")
                return {"success": False, "error": str(e)}

        @self.tool("flimks_certify")
        async def certify(n: int, R: float, chi: float, m: float,
                          s_nodes: int = 1000, t_nodes: int = 1000) -> dict:
            """Certify the subsolution inequality region by region."""
            try:
                setup = make_setup(n, R, chi, m)
                report = select_params(setup)
                if not report.feasible:
                    return {"success": False, "error": f"infeasible: {report.reason}"}
                cert = certify_subsolution(report.params, setup, GridSpec(s_nodes, t_nodes))
                return {"success": True, **cert.to_dict()}
            except Exception as e:
                logger.error(f"Certification failed: {str(e)}")
                return {"success": False, "error": str(e)}

        @self.tool("flimks_run")
        async def simulate(n: int, R: float, chi: float, m: float, mode: str = "bump",
                           t_end: float = 5.0, s_nodes: int = 128) -> dict:
            """Integrate one case and summarise the outcome."""
            try:
                setup = make_setup(n, R, chi, m)
                config = SolverConfig(s_nodes=s_nodes, t_end=t_end, blowup_threshold=50.0)
                params = None
                if mode == "threshold":
                    report = select_params(setup)
                    if not report.feasible:
                        return {"success": False, "error": f"infeasible: {report.reason}"}
                    params = report.params
                state, run_setup = build_initial_state(InitSpec(mode=mode), setup, make_grid(setup, config), params)
                result = run(state, run_setup, config, params, base_setup=setup)
                return {"success": True, **result.to_dict()}
            except Exception as e:
                logger.error(f"Run failed: {str(e)}")
                return {"success": False, "error": str(e)}

        @self.tool("flimks_regime")
        async def regime(n: int, R: float, chi: float, m: float) -> dict:
            """Classify a case as bounded, blow-up constructible or undetermined."""
            try:
                setup = make_setup(n, R, chi, m)
                return {
                    "success": True,
                    "regime": classify_regime(setup).value,
                    "m_crit": None if setup.m_crit == float("inf") else setup.m_crit,
                    "mu": setup.mu,
                }
            except Exception as e:
                logger.error(f"Regime classification failed: {str(e)}")
                return {"success": False, "error": str(e)}


def run_mcp_server():
    """Run the extension server."""
    log_dir = os.path.join(os.path.dirname(__file__), 'logs')
    os.makedirs(log_dir, exist_ok=True)

    log_file = os.path.join(log_dir, 'flimks.log')
    logging.basicConfig(
        level=logging.DEBUG,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler()
        ]
    )
    logger.info(f"Starting flimks extension - Logging to {log_file}")
    extension = FlimksExtension()
    extension.run()


if __name__ == "__main__":
    run_mcp_server()
