import pytest

from lyra.smt import SolverRunner, resolve_solver, solver_available

requires_solver = pytest.mark.skipif(
    not solver_available(), reason="no SMT solver configured"
)


@pytest.fixture(scope="session")
def runner():
    """One shared solver pool for the whole test session."""
    config = resolve_solver()
    if config is None:
        pytest.skip("no SMT solver configured")
    r = SolverRunner(config)
    yield r
    r.close()
