import numpy as np
import pytest
from scipy import stats

from hwnroute.channel import LogDistanceModel, ResourceSet
from hwnroute.dqn import (DQNPolicy, Experience, FeatureNorm, ReplayBuffer, act,
                          epsilon, featurize, record_route, train_step)
from hwnroute.netmodel import (DeadEndError, NetworkState, Route,
                               angle_between, interference_map, random_topology)
from hwnroute.qnet import Adam, QNet
from hwnroute.router import build_route
from hwnroute.selection import NeighborSet, select_rate


def setup_state(seed=0, n_relays=8, n_flows=2, e_nei=4):
    topo = random_topology(n_relays, n_flows, 2000.0, seed=seed)
    rs = ResourceSet.from_tech_specs([(40e6, 1), (400e6, 2)])
    st = NetworkState.from_pathloss(topo, rs, LogDistanceModel.uniform(2),
                                    0.0, "density", -110.0)
    st.routes[1] = Route(1, [topo.source_id(1), 5, topo.dest_id(1)], [0, 1])
    st.start_route(0)
    frontier = topo.source_id(0)
    ns = select_rate(st, frontier, 0, e_nei)
    norm = FeatureNorm.for_area(2000.0)
    return st, frontier, ns, norm


class TestEpsilonSchedule:
    def test_exact_endpoints(self):
        assert epsilon(0, 1000) == 1.0
        assert epsilon(1000, 1000) == 0.0
        assert epsilon(1500, 1000) == 0.0

    def test_linear_midpoint(self):
        assert epsilon(500, 1000) == 0.5
        assert epsilon(250, 1000) == 0.75


class TestFeaturize:
    def test_destination_slot_has_zero_distance(self):
        st, frontier, _ns, norm = setup_state()
        dest = st.topology.dest_id(0)
        ns = NeighborSet(frontier, (dest,), "manual", 2)
        sv = featurize(st, frontier, 0, ns, 0, norm)
        assert sv.raw[0] == 0.0            # slot 0, feature s1
        assert sv.raw[1] == 0.0            # s2: angle to itself is zero
        assert sv.mask.tolist() == [True, False]
        assert np.all(sv.features[5:] == 0.0)   # padded slot

    def test_on_ray_neighbor_has_zero_angle(self):
        st, frontier, _ns, norm = setup_state()
        pos = st.topology.positions()
        dest = st.topology.dest_id(0)
        # Place a virtual candidate exactly on the ray by reusing the dest
        # direction: featurize against the destination itself covers s2 = 0;
        # any other node generally has s2 > 0.
        ns = NeighborSet(frontier, (dest, 3), "manual", 2)
        sv = featurize(st, frontier, 0, ns, 1, norm)
        assert sv.raw[1] == 0.0
        assert sv.raw[6] == pytest.approx(
            angle_between(pos[frontier], pos[dest], pos[3]), rel=1e-12)

    def test_raw_features_match_recomputation(self):
        st, frontier, ns, norm = setup_state()
        pos = st.topology.positions()
        dest = st.topology.dest_id(0)
        interf = interference_map(st)
        for r in range(len(st.resource_set)):
            sv = featurize(st, frontier, 0, ns, r, norm)
            assert sv.resource_index == r
            for slot, node in enumerate(ns.neighbors):
                s1, s2, s3, s4, s5 = sv.raw[5 * slot: 5 * slot + 5]
                assert s1 == pytest.approx(np.linalg.norm(pos[node] - pos[dest]),
                                           rel=1e-12)
                assert s2 == pytest.approx(
                    angle_between(pos[frontier], pos[dest], pos[node]), abs=1e-12)
                assert s3 == pytest.approx(np.sqrt(st.gain2[frontier, node, r]),
                                           rel=1e-12)
                assert s4 == pytest.approx(interf[node, r], rel=1e-12, abs=1e-300)
                assert s5 == pytest.approx(st.link_rate(frontier, node, r, 0),
                                           rel=1e-12)

    def test_normalized_ranges(self):
        st, frontier, ns, norm = setup_state()
        sv = featurize(st, frontier, 0, ns, 0, norm)
        k = len(ns.neighbors)
        feats = sv.features[:5 * k].reshape(k, 5)
        assert np.all(feats[:, 0] >= 0) and np.all(feats[:, 0] <= 1.0)
        assert np.all(feats[:, 1] >= 0) and np.all(feats[:, 1] <= 1.0)
        assert np.all(feats[:, 2] >= -1) and np.all(feats[:, 2] <= 1)
        assert np.all(feats[:, 3] >= -1) and np.all(feats[:, 3] <= 1)
        assert np.all(np.isfinite(feats))

    def test_empty_neighbor_set_rejected(self):
        st, frontier, _ns, norm = setup_state()
        with pytest.raises(DeadEndError):
            featurize(st, frontier, 0, NeighborSet(frontier, (), "manual", 3),
                      0, norm)


class TestAct:
    def test_epsilon_one_is_uniform_over_valid_actions(self):
        st, frontier, ns, norm = setup_state(e_nei=3)
        net = QNet.create(3, seed=0, trunk_widths=(8,), stream_widths=(4,))
        rng = np.random.Generator(np.random.PCG64(77))
        valid = [(r, slot) for slot, node in enumerate(ns.neighbors)
                 for r in st.allowed_resources(0, frontier, node)]
        n_draw = 10_000
        counts = {}
        for _ in range(n_draw):
            res = act(net, st, 0, frontier, ns, eps=1.0, rng=rng, norm=norm)
            counts[(res.resource_index, res.slot)] = counts.get(
                (res.resource_index, res.slot), 0) + 1
        assert set(counts) == set(valid)
        observed = np.array([counts[v] for v in valid])
        _chi2, p = stats.chisquare(observed)
        assert p > 1e-4

    def test_epsilon_zero_single_valid_action(self):
        st, frontier, _ns, norm = setup_state()
        dest = st.topology.dest_id(0)
        ns = NeighborSet(frontier, (dest,), "manual", 1)
        net = QNet.create(1, seed=0, trunk_widths=(8,), stream_widths=(4,))
        rng = np.random.Generator(np.random.PCG64(0))
        res = act(net, st, 0, frontier, ns, eps=0.0, rng=rng, norm=norm)
        assert res.node == dest and res.slot == 0

    def test_epsilon_zero_matches_exhaustive_argmax(self):
        for seed in range(5):
            st, frontier, ns, norm = setup_state(seed=seed, e_nei=4)
            net = QNet.create(4, seed=seed, trunk_widths=(16, 16), stream_widths=(8,))
            rng = np.random.Generator(np.random.PCG64(1))
            res = act(net, st, 0, frontier, ns, eps=0.0, rng=rng, norm=norm)
            best_key = None
            best = None
            for r in range(len(st.resource_set)):
                sv = featurize(st, frontier, 0, ns, r, norm)
                q = net.forward(sv.features.reshape(1, -1))[0]
                for slot, node in enumerate(ns.neighbors):
                    if r not in st.allowed_resources(0, frontier, node):
                        continue
                    key = (-q[slot], r, node)
                    if best_key is None or key < best_key:
                        best_key = key
                        best = (node, r, slot)
            assert (res.node, res.resource_index, res.slot) == best

    def test_no_valid_action_raises_dead_end(self):
        st, frontier, _ns, norm = setup_state()
        # Jam both resources at candidate node 5 via the other flow's hops:
        # the state already commits resources 0 and 1 there, and there are
        # only three resources; block resource 2 at the frontier too.
        st.routes[1] = Route(1, [st.topology.source_id(1), 5,
                                 st.topology.dest_id(1)], [0, 1])
        st.routes[0] = Route(0, [st.topology.source_id(0), 6], [2])
        ns = NeighborSet(6, (5,), "manual", 1)
        net = QNet.create(1, seed=0, trunk_widths=(8,), stream_widths=(4,))
        rng = np.random.Generator(np.random.PCG64(0))
        with pytest.raises(DeadEndError):
            act(net, st, 0, 6, ns, eps=0.0, rng=rng, norm=norm)


class TestReplayBuffer:
    def test_ring_overwrite(self, rng):
        buf = ReplayBuffer(capacity=4, feature_dim=3)
        for i in range(6):
            buf.add(Experience(np.full(3, float(i)), 0, float(i), 0, i))
        assert len(buf) == 4
        stored = set(buf.features[:, 0].tolist())
        assert stored == {2.0, 3.0, 4.0, 5.0}

    def test_sample_without_replacement(self, rng):
        buf = ReplayBuffer(capacity=16, feature_dim=2)
        for i in range(16):
            buf.add(Experience(np.array([float(i), 0.0]), 0, 0.0, 0, i))
        feats, _a, _r = buf.sample(16, rng)
        assert sorted(feats[:, 0].tolist()) == [float(i) for i in range(16)]

    def test_undersized_buffer_rejected(self, rng):
        buf = ReplayBuffer(capacity=8, feature_dim=2)
        buf.add(Experience(np.zeros(2), 0, 0.0, 0, 0))
        with pytest.raises(ValueError, match="batch"):
            buf.sample(4, rng)


class TestRecordRoute:
    def test_completed_route_stores_identical_rewards(self):
        st, _frontier, _ns, norm = setup_state(n_relays=10, e_nei=5)
        net = QNet.create(5, seed=2, trunk_widths=(16,), stream_widths=(8,))
        policy = DQNPolicy(net, norm, eps=0.3,
                           rng=np.random.Generator(np.random.PCG64(5)))
        st.teardown(0)
        route = build_route(st, 0, policy, "rate", 5, hop_cap=20)
        if not isinstance(route, Route):
            pytest.skip("exploratory policy dead-ended on this seed")
        buf = ReplayBuffer(capacity=64, feature_dim=25)
        stored = record_route(buf, policy.trajectory, route, st, episode=3)
        assert stored == route.n_hops == len(policy.trajectory)
        expected = st.route_rate(route)
        assert np.all(buf.rewards[:stored] == expected)
        assert np.all(buf.episodes[:stored] == 3)

    def test_aborted_route_stores_zero_reward(self):
        st, frontier, ns, norm = setup_state()
        sv = featurize(st, frontier, 0, ns, 0, norm)
        buf = ReplayBuffer(capacity=8, feature_dim=sv.features.size)
        stored = record_route(buf, [(sv, 0), (sv, 1)], None, st)
        assert stored == 2
        assert np.all(buf.rewards[:2] == 0.0)

    def test_reward_matches_independent_route_rate(self):
        st, _frontier, _ns, norm = setup_state(n_relays=10, e_nei=5)
        route = Route(0, [st.topology.source_id(0), 2,
                          st.topology.dest_id(0)], [0, 2])
        st.routes[0] = route
        sv = featurize(st, st.topology.source_id(0), 0,
                       NeighborSet(st.topology.source_id(0), (2,), "manual", 5),
                       0, norm)
        buf = ReplayBuffer(capacity=8, feature_dim=sv.features.size)
        record_route(buf, [(sv, 0)], route, st)
        oracle = min(st.link_rate(tx, rx, c, 0) for tx, rx, c in route.hops())
        assert buf.rewards[0] == pytest.approx(oracle, rel=1e-12)


class TestTrainStepDeterminism:
    def test_fixed_seed_reproduces_loss_sequence(self, rng):
        def run():
            net = QNet.create(3, seed=9, trunk_widths=(8,), stream_widths=(4,))
            opt = Adam(net, learning_rate=1e-3)
            buf = ReplayBuffer(capacity=32, feature_dim=net.input_dim)
            g = np.random.Generator(np.random.PCG64(4))
            for i in range(32):
                buf.add(Experience(g.standard_normal(net.input_dim),
                                   int(g.integers(3)), float(g.uniform(0, 5e6)),
                                   0, i))
            sample_rng = np.random.Generator(np.random.PCG64(8))
            return [train_step(net, opt, buf, 8, sample_rng) for _ in range(20)]

        assert run() == run()
