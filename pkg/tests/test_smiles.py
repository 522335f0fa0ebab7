import pytest

from molgfn.elements import element_index
from molgfn.errors import (
    ChargeUnsupported,
    KekulizationFailure,
    SmilesSyntaxError,
    UnsupportedElement,
    ValenceError,
)
from molgfn.graph import canonical_key, graphs_isomorphic, is_terminal_valid, mol_formula
from molgfn.props.rings import aromatic_rings, sssr
from molgfn.smiles import ParseReport, ingest_corpus, parse_smiles, write_smiles


class TestParse:
    def test_ethanol(self):
        g = parse_smiles("CCO")
        assert g.num_nodes == 3
        o = next(i for i in range(3) if g.element_symbol(i) == "O")
        assert g.implicit_h[o] == 1

    def test_benzene_kekulized_orders_sum_nine(self):
        g = parse_smiles("c1ccccc1")
        assert sum(o for _, _, o in g.bonds) == 9
        orders = sorted(o for _, _, o in g.bonds)
        assert orders == [1, 1, 1, 2, 2, 2]

    def test_charged_rejected(self):
        with pytest.raises(ChargeUnsupported):
            parse_smiles("[NH4+]")

    def test_unsupported_element(self):
        with pytest.raises(UnsupportedElement):
            parse_smiles("CCl")
        with pytest.raises(UnsupportedElement):
            parse_smiles("C[Si](C)C")

    def test_syntax_errors(self):
        for bad in ["C1CC", "C(C", "C)C", "C=", "=C", "C..C", "", "C%1C"]:
            with pytest.raises(SmilesSyntaxError):
                parse_smiles(bad)

    def test_valence_error(self):
        with pytest.raises(ValenceError):
            parse_smiles("C(C)(C)(C)(C)C")
        with pytest.raises(ValenceError):
            parse_smiles("O=C(C)(C)C")

    def test_explicit_h_mismatch_rejected(self):
        with pytest.raises(ValenceError):
            parse_smiles("[CH2](C)")

    def test_kekulization_failure(self):
        with pytest.raises(KekulizationFailure):
            parse_smiles("c1cccc1")  # odd all-carbon aromatic ring
        with pytest.raises(KekulizationFailure):
            parse_smiles("c1ccnc1")  # pyrrole missing its H
        with pytest.raises(KekulizationFailure):
            parse_smiles("cC")  # stray aromatic atom without aromatic bonds

    def test_bracket_atoms(self):
        g = parse_smiles("[nH]1cccc1")
        n = next(i for i in range(5) if g.element_symbol(i) == "N")
        assert g.implicit_h[n] == 1

    def test_stereo_bonds_ignored(self):
        g = parse_smiles("F/C=C/F")
        assert mol_formula(g) == "C2F2H2"

    def test_chirality_parsed(self):
        g = parse_smiles("N[C@@H](C)C(=O)O")
        assert any(c for c in g.chirality)

    def test_ring_bond_digit_reuse(self):
        g = parse_smiles("C1CC1C1CC1")
        assert len(sssr(g)) == 2

    def test_percent_ring_closure(self):
        assert graphs_isomorphic(parse_smiles("C%12CC%12"), parse_smiles("C1CC1"))

    def test_multivalent_sulfur(self):
        g = parse_smiles("O=S(=O)(C)C")
        s = next(i for i in range(5) if g.element_symbol(i) == "S")
        assert int(g.bond_sums[s]) == 6 and g.implicit_h[s] == 0

    def test_aromatic_exocyclic_carbonyl(self):
        g = parse_smiles("O=c1cccc[nH]1")  # 2-pyridone, aromatic form
        assert is_terminal_valid(g)
        assert len(aromatic_rings(g)) == 1


class TestWrite:
    def test_single_carbon(self):
        assert write_smiles(parse_smiles("C")) == "C"

    def test_round_trip_spec_molecules(self):
        for smi in [
            "CCO", "c1ccccc1", "CC(=O)Nc1ccccc1", "c1ccc2[nH]ccc2c1",
            "O=S(=O)(c1ccccc1)N", "C1CC2CCC1CC2", "FC(F)(F)c1ccc(N)cc1",
            "CC1=CC(=O)CC(C)(C)C1",
        ]:
            g = parse_smiles(smi)
            assert graphs_isomorphic(parse_smiles(write_smiles(g)), g)

    def test_isomorphic_graphs_serialize_identically(self):
        a = parse_smiles("OCC(N)C1CC1")
        b = parse_smiles("C1CC1C(CO)N")
        assert write_smiles(a) == write_smiles(b)

    def test_corpus_round_trip(self, corpus_graphs):
        for g in corpus_graphs[:1000]:
            again = parse_smiles(write_smiles(g))
            assert canonical_key(again) == canonical_key(g)


class TestKekulizationValidity:
    def test_aromatic_perception_matches_oracle(self, corpus_graphs):
        # the assignment must give the independently-computed aromatic rings
        from oracles import oracle_aromatic_rings

        for g in corpus_graphs[:300]:
            main = {frozenset(r) for r in aromatic_rings(g)}
            assert main == set(oracle_aromatic_rings(g))

    def test_valences_after_kekulization(self, corpus_graphs):
        for g in corpus_graphs[:500]:
            assert is_terminal_valid(g)


class TestIngest:
    def test_counts_add_up(self, tmp_path):
        p = tmp_path / "mix.smi"
        p.write_text(
            "CCO id1\n"
            "c1ccccc1 id2\n"
            "Xx123\n"
            "[NH4+] salt\n"
            "CCl chloro\n"
            "C(C)(C)(C)(C)C pentavalent\n"
            "c1cccc1 oddring\n"
            "\n"
            "# comment\n"
        )
        graphs, report = ingest_corpus(p)
        assert report.accepted == 2 == len(graphs)
        assert report.rejected["syntax_error"] == 1
        assert report.rejected["net_charge"] == 1
        assert report.rejected["unsupported_element"] == 1
        assert report.rejected["valence_error"] == 1
        assert report.rejected["kekulization_failure"] == 1
        assert report.total == 7

    def test_full_corpus_accepted(self, corpus_path):
        graphs, report = ingest_corpus(corpus_path)
        assert report.accepted == 6000
        assert sum(report.rejected.values()) == 0

    def test_report_dataclass(self):
        r = ParseReport()
        assert r.total == 0
