import math

import numpy as np
import pytest

from wormnet.epidemic import (
    CSV_HEADER,
    TimeSeries,
    WormBehavior,
    growth_rate,
    run,
    slowdown_factor,
    time_to_fraction,
)
from wormnet.graph import Graph
from wormnet.netgen import build_complete
from wormnet.throttle import ThrottleConfig


def _star(n):
    return Graph(n, False, [(0, i) for i in range(1, n)])


def _series(infected, n, dt=1.0):
    rows = []
    for k, i in enumerate(infected):
        rows.append((k, k * dt, n - i, i, 0, 0, 0))
    return TimeSeries(rows)


class TestWormBehavior:
    def test_validation(self):
        with pytest.raises(ValueError):
            WormBehavior("broadcast", 1.0)
        with pytest.raises(ValueError):
            WormBehavior("scan", 0.0)
        with pytest.raises(ValueError):
            WormBehavior("scan", 1.0, infection_probability=0.0)
        with pytest.raises(ValueError):
            WormBehavior("scan", 1.0, infection_probability=1.5)


class TestTimeSeries:
    def test_csv_roundtrip(self, tmp_path):
        ts = _series([1, 3, 9], 100)
        p = tmp_path / "run.csv"
        ts.to_csv(p)
        assert p.read_text().splitlines()[0] == CSV_HEADER
        back = TimeSeries.from_csv(p)
        assert back.rows == ts.rows

    def test_header_mismatch_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("tick,t,s,i\n0,0,9,1\n")
        with pytest.raises(ValueError, match="header"):
            TimeSeries.from_csv(p)

    def test_columns(self):
        ts = _series([1, 2], 10)
        assert ts.column("infected").tolist() == [1, 2]
        assert ts.column("t").dtype == float
        assert ts.n == 10


class TestRunInvariants:
    def test_counts_conserved_and_monotone(self):
        g = build_complete(60)
        worm = WormBehavior("neighbor", attempt_rate=5.0)
        ts = run(g, worm, init_infected={0}, dt=0.1, t_max=10.0, seed=1)
        s = ts.column("susceptible")
        i = ts.column("infected")
        r = ts.column("recovered")
        assert np.all(s + i + r == 60)
        assert np.all(np.diff(i) >= 0)  # SI: no recovery from infection
        assert np.all(np.diff(s) <= 0)

    def test_vaccinated_nodes_never_infected(self):
        g = build_complete(40)
        worm = WormBehavior("scan", attempt_rate=20.0)
        ts = run(g, worm, init_infected={0}, vaccinated=set(range(1, 11)),
                 dt=0.1, t_max=30.0, seed=2)
        assert ts.column("recovered")[-1] == 10
        assert ts.column("infected")[-1] <= 30

    def test_deterministic_per_seed(self):
        g = build_complete(50)
        worm = WormBehavior("neighbor", attempt_rate=3.0)
        kw = dict(init_infected={4}, dt=0.05, t_max=5.0, seed=9)
        assert run(g, worm, **kw).to_csv_text() == run(g, worm, **kw).to_csv_text()

    def test_stops_when_everyone_infected(self):
        g = build_complete(10)
        worm = WormBehavior("neighbor", attempt_rate=100.0)
        ts = run(g, worm, init_infected={0}, dt=0.1, t_max=1000.0, seed=0)
        assert ts.rows[-1][3] == 10
        assert len(ts) < 100  # terminated long before t_max

    def test_spread_confined_to_component(self):
        # two disjoint triangles; infection starts in the first
        edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]
        g = Graph(6, False, edges)
        worm = WormBehavior("neighbor", attempt_rate=50.0)
        ts = run(g, worm, init_infected={0}, dt=0.1, t_max=100.0, seed=3)
        assert ts.rows[-1][3] == 3

    def test_seed_overlap_with_vaccinated_rejected(self):
        g = build_complete(5)
        worm = WormBehavior("neighbor", attempt_rate=1.0)
        with pytest.raises(ValueError, match="overlap"):
            run(g, worm, init_infected={0}, vaccinated={0}, t_max=1.0)

    def test_scan_address_space_must_cover_nodes(self):
        g = build_complete(100)
        worm = WormBehavior("scan", attempt_rate=1.0, address_space=50)
        with pytest.raises(ValueError, match="address_space"):
            run(g, worm, init_infected={0}, t_max=1.0)

    def test_directed_edges_spread_one_way(self):
        g = Graph(3, True, [(0, 1), (1, 2)])
        worm = WormBehavior("neighbor", attempt_rate=50.0)
        ts = run(g, worm, init_infected={2}, dt=0.1, t_max=10.0, seed=0)
        assert ts.rows[-1][3] == 1  # node 2 has no out-edges


class TestAgainstMarkovOracle:
    def test_star_one_tick_mean_new_infections(self):
        # hub infected on a 5-node star: each attempt hits a uniform leaf, so
        # E[new] = 4 * (1 - exp(-mu/4)) for mu = rate * dt attempts on average
        g = _star(5)
        mu = 1.0
        worm = WormBehavior("neighbor", attempt_rate=mu, infection_probability=1.0)
        expected = 4 * (1 - math.exp(-mu / 4))
        samples = []
        for rep in range(3000):
            ts = run(g, worm, init_infected={0}, dt=1.0, t_max=1.0, seed=rep)
            samples.append(ts.rows[-1][3] - 1)
        mean = np.mean(samples)
        sem = np.std(samples) / math.sqrt(len(samples))
        assert abs(mean - expected) < 4 * sem + 1e-12

    def test_scan_one_tick_mean_new_infections(self):
        # one infected scanner over address space A: each susceptible node is
        # hit with prob 1/A per attempt -> E[new] = (n-1) * (1 - exp(-mu/A))
        n, A, mu = 20, 64, 8.0
        g = build_complete(n)  # topology is irrelevant to scan targeting
        worm = WormBehavior("scan", attempt_rate=mu, address_space=A)
        expected = (n - 1) * (1 - math.exp(-mu / A))
        samples = []
        for rep in range(3000):
            ts = run(g, worm, init_infected={0}, dt=1.0, t_max=1.0, seed=rep)
            samples.append(ts.rows[-1][3] - 1)
        mean = np.mean(samples)
        sem = np.std(samples) / math.sqrt(len(samples))
        assert abs(mean - expected) < 4 * sem + 1e-12

    def test_infection_probability_thins_attempts(self):
        # success prob p multiplies the per-attempt hit rate exactly
        g = _star(5)
        worm = WormBehavior("neighbor", attempt_rate=2.0, infection_probability=0.25)
        expected = 4 * (1 - math.exp(-2.0 * 0.25 / 4))
        samples = []
        for rep in range(3000):
            ts = run(g, worm, init_infected={0}, dt=1.0, t_max=1.0, seed=rep)
            samples.append(ts.rows[-1][3] - 1)
        mean = np.mean(samples)
        sem = np.std(samples) / math.sqrt(len(samples))
        assert abs(mean - expected) < 4 * sem + 1e-12


class TestThrottledRuns:
    def test_infinite_rate_throttle_equals_no_throttle(self):
        g = build_complete(80)
        worm = WormBehavior("neighbor", attempt_rate=10.0)
        kw = dict(init_infected={0}, dt=0.1, t_max=8.0, seed=6)
        plain = run(g, worm, **kw)
        free = run(g, worm, throttle=ThrottleConfig(rate=math.inf), **kw)
        assert [r[:6] for r in plain.rows] == [r[:6] for r in free.rows]

    def test_throttle_slows_spread(self):
        g = build_complete(200)
        worm = WormBehavior("neighbor", attempt_rate=50.0)
        kw = dict(init_infected={0}, dt=0.05, seed=7)
        fast = run(g, worm, t_max=4.0, **kw)
        slow = run(g, worm, throttle=ThrottleConfig(rate=1.0), t_max=60.0, **kw)
        t_fast = time_to_fraction(fast, 0.5)
        t_slow = time_to_fraction(slow, 0.5)
        assert t_fast is not None and t_slow is not None
        assert t_slow > 3 * t_fast

    def test_queued_column_tracks_backlog(self):
        g = build_complete(50)
        worm = WormBehavior("neighbor", attempt_rate=30.0)
        ts = run(g, worm, init_infected={0}, throttle=ThrottleConfig(rate=1.0),
                 dt=0.1, t_max=3.0, seed=8)
        q = ts.column("queued")
        assert np.all(q >= 0)
        assert q.max() > 0

    def test_bounded_queue_run_completes(self):
        g = build_complete(60)
        worm = WormBehavior("neighbor", attempt_rate=40.0)
        cfg = ThrottleConfig(rate=2.0, queue_capacity=3)
        ts = run(g, worm, init_infected={0}, throttle=cfg, dt=0.1, t_max=40.0, seed=4)
        q = ts.column("queued")
        i = ts.column("infected")
        assert np.all(q <= 3 * i)
        assert np.all(np.diff(i) >= 0)


class TestMetrics:
    def test_growth_rate_recovers_exact_exponential(self):
        ts = _series([2, 4, 8, 16, 32], 1000)
        assert growth_rate(ts) == pytest.approx(math.log(2))

    def test_growth_rate_window_excludes_saturation(self):
        # late rows above n/2 must not flatten the fit
        ts = _series([2, 4, 8, 16, 30, 31, 32], 32)
        assert growth_rate(ts) == pytest.approx(math.log(2))

    def test_growth_rate_needs_enough_rows(self):
        with pytest.raises(ValueError, match=">= 3 rows"):
            growth_rate(_series([1, 2, 100], 100))

    def test_time_to_fraction(self):
        ts = _series([1, 5, 50, 99], 100, dt=0.5)
        assert time_to_fraction(ts, 0.5) == pytest.approx(1.0)
        assert time_to_fraction(ts, 0.995) is None
        with pytest.raises(ValueError):
            time_to_fraction(ts, 0.0)

    def test_slowdown_factor_time_method(self):
        base = _series([1, 60, 99], 100, dt=1.0)
        slow = _series([1, 2, 4, 8, 16, 32, 64, 99], 100, dt=1.0)
        assert slowdown_factor(base, slow, q=0.5) == pytest.approx(6.0)

    def test_slowdown_factor_growth_method(self):
        base = _series([2, 8, 32], 1000)
        slow = _series([2, 4, 8], 1000)
        assert slowdown_factor(base, slow, method="growth") == pytest.approx(2.0)

    def test_slowdown_factor_none_when_not_reached(self):
        base = _series([1, 99], 100)
        slow = _series([1, 2], 100)
        assert slowdown_factor(base, slow, q=0.9) is None
