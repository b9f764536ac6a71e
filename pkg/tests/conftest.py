import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from nilcoh import algebra


def corpus() -> dict:
    """The standard algebra corpus used across the suite."""
    return {
        "abelian1": algebra.abelian(1),
        "abelian2": algebra.abelian(2),
        "abelian3": algebra.abelian(3),
        "abelian4": algebra.abelian(4),
        "abelian5": algebra.abelian(5),
        "heisenberg3": algebra.heisenberg3(),
        "heisenberg5": algebra.heisenberg5(),
        "filiform4": algebra.filiform(4),
        "free2step3": algebra.free_nilpotent_two_step(3),
    }


@pytest.fixture(scope="session")
def algebras() -> dict:
    return corpus()
