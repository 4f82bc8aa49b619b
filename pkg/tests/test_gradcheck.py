import numpy as np
import pytest

from src.core.errors import ConfigError
from src.services.gradcheck_service import (
	END_TO_END_THRESHOLD,
	OP_THRESHOLD,
	check_case,
	head_cases,
	nonlocal_cases,
	run_gradcheck,
)


@pytest.mark.parametrize("case", nonlocal_cases(0), ids=lambda c: c.op)
def test_nonlocal_gradients(case):
	assert check_case(case, 1e-3) < OP_THRESHOLD


@pytest.mark.parametrize("case", head_cases(0), ids=lambda c: c.op)
def test_end_to_end_head_gradients(case):
	assert case.threshold == END_TO_END_THRESHOLD
	assert check_case(case, 1e-3) < END_TO_END_THRESHOLD


def test_run_gradcheck_rows():
	rows = run_gradcheck("nonlocal", [1e-3, 1e-4], seed=1)
	assert len(rows) == 2 * len(nonlocal_cases(1))
	assert all(row.passed for row in rows)
	assert sorted({row.eps for row in rows}) == [1e-4, 1e-3]
	assert all(np.isfinite(row.max_rel_error) for row in rows)


def test_unknown_suite():
	with pytest.raises(ConfigError):
		run_gradcheck("everything")
