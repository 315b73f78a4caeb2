"""
Unit tests for the bounded worker pool.
"""
import threading
import time

import pytest

from worker.pool import WorkerPool, run_in_order


class TestWorkerPool:
    """Tests for WorkerPool and run_in_order."""

    @pytest.mark.asyncio
    async def test_results_in_input_order(self):
        """Test results follow the input order when later items finish first."""
        def slow_first(k):
            time.sleep(0.02 * (3 - k))
            return k * k

        assert await WorkerPool(3).run(slow_first, [0, 1, 2]) == [0, 1, 4]

    @pytest.mark.asyncio
    async def test_concurrency_bound(self):
        """Test no more than `concurrency` jobs run at once."""
        lock = threading.Lock()
        state = {"running": 0, "peak": 0}

        def job(_):
            with lock:
                state["running"] += 1
                state["peak"] = max(state["peak"], state["running"])
            time.sleep(0.01)
            with lock:
                state["running"] -= 1

        await WorkerPool(2).run(job, range(8))
        assert state["peak"] <= 2

    @pytest.mark.asyncio
    async def test_first_error_raised(self):
        """Test a failing job propagates its exception."""
        def job(k):
            if k == 1:
                raise ValueError("bad item")
            return k

        with pytest.raises(ValueError, match="bad item"):
            await WorkerPool(2).run(job, [0, 1, 2])

    def test_sequential_path(self):
        """Test a single worker maps items in order without an event loop."""
        assert run_in_order(str, [1, 2, 3], 1) == ["1", "2", "3"]

    def test_invalid_concurrency(self):
        """Test a pool needs at least one worker."""
        with pytest.raises(ValueError):
            WorkerPool(0)
