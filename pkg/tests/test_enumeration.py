import itertools

import numpy as np
import pytest

from molgfn.conditioning import PropertySpec, ConditionalRange
from molgfn.elements import element_index, implicit_h_count
from molgfn.enumeration import (
    TinySpaceConfig,
    distribution_distance,
    enumerate_terminals,
    exact_target,
)
from molgfn.errors import BudgetExceeded
from molgfn.props import mol_wt


class TestEnumerateTerminals:
    def test_single_carbon_space(self):
        terms = enumerate_terminals(TinySpaceConfig(elements=("C",), max_atoms=1))
        assert len(terms) == 1

    def test_two_carbons_all_orders(self):
        terms = enumerate_terminals(
            TinySpaceConfig(elements=("C",), max_atoms=2, orders=(1, 2, 3))
        )
        assert len(terms) == 4  # C, C-C, C=C, C#C

    def test_budget_guard(self):
        with pytest.raises(BudgetExceeded):
            enumerate_terminals(
                TinySpaceConfig(elements=("C", "N", "O"), max_atoms=3, state_budget=10)
            )

    def test_matches_independent_recursive_generator(self):
        cfg = TinySpaceConfig(elements=("C", "N", "O"), max_atoms=3, orders=(1, 2))
        terms = enumerate_terminals(cfg)
        assert len(terms) == len(_recursive_enumerate(("C", "N", "O"), 3, (1, 2)))


def _recursive_enumerate(symbols, max_atoms, orders):
    """Second, independent enumerator: all labeled connected valence-valid
    graphs, deduplicated by brute-force isomorphism over permutations."""
    elems = [element_index(s) for s in symbols]
    found = []

    def canon_forms(labels, edges):
        n = len(labels)
        forms = set()
        for perm in itertools.permutations(range(n)):
            relabeled = tuple(labels[perm.index(i)] for i in range(n))
            mapped = tuple(
                sorted(
                    (min(perm[u], perm[v]), max(perm[u], perm[v]), o)
                    for u, v, o in edges
                )
            )
            forms.add((relabeled, mapped))
        return min(forms)

    def valence_ok(labels, edges):
        sums = [0] * len(labels)
        for u, v, o in edges:
            sums[u] += o
            sums[v] += o
        return all(implicit_h_count(e, s) >= 0 for e, s in zip(labels, sums))

    def connected(n, edges):
        if n == 1:
            return True
        adj = {i: set() for i in range(n)}
        for u, v, _ in edges:
            adj[u].add(v)
            adj[v].add(u)
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == n

    seen_forms = set()
    for n in range(1, max_atoms + 1):
        pairs = list(itertools.combinations(range(n), 2))
        for labels in itertools.product(elems, repeat=n):
            for edge_orders in itertools.product([0] + list(orders), repeat=len(pairs)):
                edges = tuple(
                    (u, v, o) for (u, v), o in zip(pairs, edge_orders) if o
                )
                if not connected(n, edges):
                    continue
                if not valence_ok(labels, edges):
                    continue
                form = canon_forms(list(labels), edges)
                if form not in seen_forms:
                    seen_forms.add(form)
                    found.append(form)
    return found


class TestExactTarget:
    @pytest.fixture(scope="class")
    def space(self):
        cfg = TinySpaceConfig(elements=("C", "N", "O"), max_atoms=3, orders=(1, 2))
        return enumerate_terminals(cfg)

    def test_constant_reward_uniform(self, space):
        spec = PropertySpec("mol_wt", 0.0, 900.0, 1.0, 800.0, 0, lam=10.0)
        cond = ConditionalRange((1.0,), (800.0,))  # everything inside, d=0 -> 1
        target = exact_target(space, [spec], cond, 1.0, lambda g: {"mol_wt": mol_wt(g)})
        vals = list(target.values())
        assert np.allclose(vals, 1.0 / len(space))

    def test_probabilities_sum_to_one(self, space):
        spec = PropertySpec("mol_wt", 0.0, 900.0, 30.0, 60.0, 0, lam=10.0)
        cond = ConditionalRange((30.0,), (60.0,))
        target = exact_target(space, [spec], cond, 4.0, lambda g: {"mol_wt": mol_wt(g)})
        assert abs(sum(target.values()) - 1.0) < 1e-12

    def test_large_beta_concentrates_on_argmax(self, space):
        spec = PropertySpec("mol_wt", 0.0, 900.0, 30.0, 60.0, 1, lam=10.0)
        cond = ConditionalRange((30.0,), (60.0,))
        value_fn = lambda g: {"mol_wt": mol_wt(g)}
        sharp = exact_target(space, [spec], cond, 400.0, value_fn)
        best_mass = sum(p for k, p in sharp.items())
        top = max(sharp.values())
        assert top > 0.5  # essentially all mass on the argmax set


class TestDistributionDistance:
    def test_exact_match_zero(self):
        t = {"a": 0.5, "b": 0.5}
        assert distribution_distance({"a": 5, "b": 5}, t) == 0.0

    def test_disjoint_supports_one(self):
        assert distribution_distance({"a": 1.0}, {"b": 1.0}) == 1.0

    def test_multinomial_concentration(self):
        rng = np.random.default_rng(0)
        target = {"a": 0.4, "b": 0.3, "c": 0.2, "d": 0.1}
        draws = rng.choice(4, size=50000, p=list(target.values()))
        counts = dict(zip("abcd", np.bincount(draws, minlength=4)))
        assert distribution_distance(counts, target) <= 0.02
