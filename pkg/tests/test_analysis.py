import math

import numpy as np
import pytest

from gsttcm import golden_code as gc
from gsttcm.analysis import (DELTA_MIN, TABLE_ROWS, AnalysisError, asymptotic_gain_db,
                             branch_weight, branch_weight_brute, delta_p, delta_s, gain_report,
                             lattice_min_det, M_TILDE, min_det_subcode, search_polynomials,
                             shortest_vector, subcode_generator, table_rows, verify_e8_equivalence)
from gsttcm.lattice_partition import PartitionConfig
from gsttcm.trellis_codec import build_trellis

P22, P02, P03 = PartitionConfig(2, 2), PartitionConfig(0, 2), PartitionConfig(0, 3)
FOUR = build_trellis(((1,), (0, 1)))
SIXTEEN = build_trellis(((0, 1), (1, 0, 1)))
SIXTY_FOUR = build_trellis(((0, 1), (0, 0, 1), (1, 0, 0, 1)))


@pytest.mark.parametrize("k,value", [(0, 0.2), (2, 0.8), (4, 3.2)])
def test_min_det_subcode(k, value):
    assert min_det_subcode(k, radius=2) == pytest.approx(value, abs=1e-9)


def test_min_det_subcode_rejects():
    with pytest.raises(AnalysisError):
        min_det_subcode(5)
    with pytest.raises(AnalysisError):
        min_det_subcode(1, radius=1)


@pytest.mark.parametrize("level", range(5))
def test_construction_a_lattices_have_chain_min_dets(level):
    assert lattice_min_det(level) == pytest.approx(2 ** level * DELTA_MIN, abs=1e-12)


@pytest.mark.parametrize("cfg,value", [(P22, 3.2), (P02, 0.8), (P03, 1.6)])
def test_delta_p(cfg, value):
    assert delta_p(cfg) == pytest.approx(value)


@pytest.mark.parametrize("trellis,cfg,value", [(FOUR, P22, 2.4), (SIXTEEN, P22, 4.0),
                                               (SIXTY_FOUR, P03, 2.2)])
def test_delta_s_examples(trellis, cfg, value):
    d = delta_s(trellis, cfg)
    assert d.value == pytest.approx(value, abs=1e-12)
    assert not d.truncated


@pytest.mark.parametrize("row", TABLE_ROWS, ids=lambda r: f"ex{r.example}-{r.states}")
def test_delta_s_formula_matches_brute_force(row):
    tr = build_trellis(row.polys)
    p = row.partition
    assert delta_s(tr, p).value == pytest.approx(delta_s(tr, p, mode="brute").value, abs=1e-12)


@pytest.mark.parametrize("row", TABLE_ROWS, ids=lambda r: f"ex{r.example}-{r.states}")
def test_branch_weights_formula_matches_brute_force(row):
    tr = build_trellis(row.polys)
    p = row.partition
    labels = {tuple(int(a) for a in tr.outputs[s, b]) for s in range(tr.states) for b in range(4)}
    bad = [lab for lab in sorted(labels)
           if abs(branch_weight(lab, p) - branch_weight_brute(lab, p)) > 1e-9]
    assert not bad, f"{len(bad)} labels disagree, first {bad[:3]}"


def test_asymptotic_gain_examples():
    assert asymptotic_gain_db(12 * DELTA_MIN, 2.5, DELTA_MIN, 1.0) == pytest.approx(1.4, abs=0.05)
    assert asymptotic_gain_db(4 * DELTA_MIN, 20.5, DELTA_MIN, 10.5) == pytest.approx(0.1, abs=0.05)
    assert asymptotic_gain_db(0.3, 2.0, 0.3, 2.0) == 0.0
    with pytest.raises(AnalysisError):
        asymptotic_gain_db(0.0, 1.0, 1.0, 1.0)


@pytest.mark.parametrize("row", TABLE_ROWS, ids=lambda r: f"ex{r.example}-{r.states}")
def test_table_gains(row):
    rep = gain_report(build_trellis(row.polys), row.partition)
    assert rep.gamma_p_db == pytest.approx(row.reference_gamma_p, abs=0.05)
    assert rep.gamma_s_db == pytest.approx(row.reference_gamma_s, abs=0.05)
    assert rep.delta_prime_min == min(rep.delta_p, rep.delta_s)


def test_parallel_transitions_dominate_for_sixteen_states():
    for cfg in (P22, P02):
        rep = gain_report(SIXTEEN, cfg)
        assert rep.delta_prime_min == rep.delta_p


def test_table_rows_report():
    rows = table_rows()
    assert len(rows) == 8
    r = next(r for r in rows if r["lattice"] == "E8" and r["states"] == 16)
    assert round(r["gamma_p_db"], 1) == 2.0 and round(r["gamma_s_db"], 1) == 2.5
    r = next(r for r in rows if r["lattice"] == "Z8" and r["states"] == 64 and r["bpcu"] == 10)
    assert round(r["gamma_p_db"], 1) == 1.3 and round(r["gamma_s_db"], 1) == 2.0
    assert table_rows() == rows


def test_search_four_states():
    res = search_polynomials(4, 2, P22)
    assert res.best_delta_s == pytest.approx(12 * DELTA_MIN)
    assert not res.criterion_applied
    assert res.rank_of(((1,), (0, 1))) == 0
    assert all(any(any(p) for p in c.representative) for c in res.classes)


def test_search_sixteen_states():
    res = search_polynomials(16, 2, P22)
    assert res.best_delta_s == pytest.approx(20 * DELTA_MIN)
    assert res.rank_of(((0, 1), (1, 0, 1))) == 0


def test_search_rejects_bad_args():
    with pytest.raises(AnalysisError):
        search_polynomials(8, 2, P22)
    with pytest.raises(AnalysisError):
        search_polynomials(16, 3, P22)


def test_e8_check():
    r = verify_e8_equivalence()
    assert r.d2_min == 4 and r.abs_det == 16 and r.certified
    assert r.shortest_vectors == 240


def test_e8_generator_rows_mod2_in_c2():
    # literal row reading; the code-frame column reading is the consistent one (see ledger)
    r = verify_e8_equivalence()
    assert r.columns_in_c2
    assert r.rows_mod2_in_c2


def test_subcode_generator_volumes():
    # right multiplication by B scales real 8-volume by |det B|^4 = 4
    for k in range(5):
        m = subcode_generator(k)
        assert abs(round(np.linalg.det(m.astype(float)))) == 4 ** k
    assert np.array_equal(subcode_generator(2), M_TILDE)


def test_shortest_vector_of_z8():
    d2, count, _, certified = shortest_vector(np.eye(8, dtype=np.int64))
    assert (d2, count, certified) == (1, 16, True)


def test_determinant_inequality():
    from gsttcm.trellis_codec import GstTcmConfig, gst_tcm_encode
    cfg = GstTcmConfig(P22, FOUR, 4)
    rng = np.random.default_rng(0)
    for _ in range(200):
        x = gst_tcm_encode(rng.integers(0, 2, cfg.frame_bits), cfg).codewords
        a = np.einsum("tij,tkj->tik", x, x.conj())
        assert np.linalg.det(a.sum(axis=0)).real >= np.linalg.det(a).real.sum() - 1e-9
