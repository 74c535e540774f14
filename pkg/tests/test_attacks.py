"""Tests for the adversary harness: rates, transcripts, and exact oracles."""

import inspect
import math
from fractions import Fraction

import numpy as np
import pytest

import qpke.attacks
from qpke.attacks import (
    CPA_PRECISION_CAP,
    CPA_TOTAL_QUBIT_CAP,
    CcaSessionResult,
    chosen_ciphertext_session,
    chosen_plaintext_distinguishability,
    enumerate_forward_search_success,
    forward_search_trial,
    identify_rotations,
    key_recovery_baseline,
    parity_from_fails,
    run_forward_search,
    single_use_constraint_check,
)
from qpke.protocol import (
    CipherState,
    PrivateKey,
    PublicKey,
    QuantumRegister,
    apply_encryption_flags,
    encrypt,
    key_id_of,
    keygen,
    prepare_register,
    swap_test_registers,
)
from qpke.security_analysis import MeasurementStrategy


def three_se(p: float, trials: int) -> float:
    return 3.0 * math.sqrt(p * (1.0 - p) / trials)


class TestDecisionRules:
    """The two forward-search decision rules as pure functions."""

    def test_identify_rotations_marks_failures(self):
        assert identify_rotations([False, True, False]) == (0, 1, 0)
        assert identify_rotations([]) == ()

    def test_parity_counts_failures(self):
        assert parity_from_fails([False, False]) == 0
        assert parity_from_fails([True, False, True]) == 0
        assert parity_from_fails([True, True, True]) == 1


class TestEnumerationOracle:
    """Exact branch enumeration against the closed-form rates."""

    def test_identify_all_closed_form(self):
        for alpha in range(1, 7):
            exact = enumerate_forward_search_success(alpha, "identify-all")
            assert exact == Fraction(3, 4) ** alpha

    def test_parity_aware_closed_form(self):
        for alpha in range(1, 7):
            exact = enumerate_forward_search_success(alpha, "parity-aware")
            assert exact == Fraction(1, 2) + Fraction(1, 1 << (alpha + 1))

    def test_two_qubit_values(self):
        assert enumerate_forward_search_success(2, "identify-all") == Fraction(9, 16)
        assert float(enumerate_forward_search_success(2, "identify-all")) == 0.5625
        assert enumerate_forward_search_success(2, "parity-aware") == Fraction(5, 8)

    def test_parity_rule_dominates_identify_all(self):
        for alpha in range(1, 9):
            parity = enumerate_forward_search_success(alpha, "parity-aware")
            identify = enumerate_forward_search_success(alpha, "identify-all")
            assert parity >= identify
            if alpha > 1:
                assert parity > identify

    def test_validation(self):
        with pytest.raises(ValueError, match="rule"):
            enumerate_forward_search_success(2, "majority")
        with pytest.raises(ValueError, match="alpha"):
            enumerate_forward_search_success(0, "identify-all")


class TestForwardSearchTrial:
    """Single-trial mechanics at the register level."""

    def test_unrotated_block_never_fails(self):
        rng = np.random.default_rng(11)
        key = PrivateKey(n=4, s=(9,))
        for _ in range(200):
            fails, flags = forward_search_trial(key, 0, 1, rng)
            assert flags == (0,)
            assert fails == [False]

    def test_rotated_block_fails_half_the_time(self):
        rng = np.random.default_rng(12)
        key = PrivateKey(n=4, s=(3,))
        trials = 4000
        fail_count = 0
        for _ in range(trials):
            fails, flags = forward_search_trial(key, 1, 1, rng)
            assert flags == (1,)
            fail_count += fails[0]
        assert abs(fail_count / trials - 0.5) < three_se(0.5, trials)

    def test_flags_carry_message_parity(self):
        rng = np.random.default_rng(13)
        key = PrivateKey(n=4, s=(1, 5, 9))
        for bit in (0, 1):
            fails, flags = forward_search_trial(key, bit, 3, rng)
            assert len(fails) == 3
            assert sum(flags) % 2 == bit


class TestRunForwardSearch:
    """Monte Carlo rates against the exact oracle."""

    def test_single_qubit_rate(self):
        rng = np.random.default_rng(26)
        reports = run_forward_search(1, 10000, rng)
        for rule in ("identify-all", "parity-aware"):
            report = reports[rule]
            assert report.predicted_rate == 0.75
            assert abs(report.success_rate - 0.75) < three_se(0.75, report.trials)
        assert reports["identify-all"].successes == reports["parity-aware"].successes

    def test_two_qubit_rates(self):
        rng = np.random.default_rng(22)
        reports = run_forward_search(2, 10000, rng)
        identify = reports["identify-all"]
        parity = reports["parity-aware"]
        assert identify.predicted_rate == 0.5625
        assert abs(identify.success_rate - 0.5625) < three_se(0.5625, 10000)
        assert parity.predicted_rate == 0.625
        assert abs(parity.success_rate - 0.625) < three_se(0.625, 10000)

    def test_three_qubit_rates(self):
        rng = np.random.default_rng(23)
        reports = run_forward_search(3, 6000, rng)
        identify = reports["identify-all"]
        assert identify.predicted_rate == pytest.approx(27 / 64)
        assert abs(identify.deviation) < three_se(27 / 64, 6000)
        parity = reports["parity-aware"]
        assert parity.predicted_rate == pytest.approx(9 / 16)
        assert abs(parity.deviation) < three_se(9 / 16, 6000)

    def test_deterministic_for_fixed_seed(self):
        a = run_forward_search(2, 400, np.random.default_rng(99))
        b = run_forward_search(2, 400, np.random.default_rng(99))
        assert a == b

    def test_report_record(self):
        rng = np.random.default_rng(24)
        report = run_forward_search(1, 200, rng)["parity-aware"]
        record = report.to_record()
        assert record["attack"] == "forward_search"
        assert record["rule"] == "parity-aware"
        assert record["deviation"] == pytest.approx(
            record["success_rate"] - record["predicted_rate"]
        )
        assert record["stderr"] > 0.0

    def test_validation(self):
        rng = np.random.default_rng(1)
        with pytest.raises(ValueError, match="alpha"):
            run_forward_search(0, 10, rng)
        with pytest.raises(ValueError, match="trials"):
            run_forward_search(1, 0, rng)


class TestSingleUseConstraint:
    """Repeating a symmetry test on the projected pair is uninformative."""

    def test_identical_pair_always_passes(self):
        rng = np.random.default_rng(31)
        result = single_use_constraint_check(300, rng, index_offsets=(0,))
        stats = result.scenarios[0]
        assert stats.overlap == 1.0
        assert stats.first_pass_rate == 1.0
        assert stats.second_pass_given_pass == 1.0
        assert math.isnan(stats.second_pass_given_fail)

    def test_orthogonal_pair_conditionals_are_deterministic(self):
        rng = np.random.default_rng(32)
        result = single_use_constraint_check(3000, rng, index_offsets=(4,))
        stats = result.scenarios[0]
        assert stats.overlap == pytest.approx(0.0, abs=1e-15)
        assert abs(stats.first_pass_rate - 0.5) < three_se(0.5, 3000)
        assert stats.second_pass_given_pass == 1.0
        assert stats.second_pass_given_fail == 0.0

    def test_partial_overlap_second_use_differs_from_first_use_law(self):
        rng = np.random.default_rng(33)
        result = single_use_constraint_check(4000, rng, index_offsets=(1,))
        stats = result.scenarios[0]
        first_law = (1.0 + math.cos(math.pi / 8) ** 2) / 2.0
        assert stats.predicted_first_pass == pytest.approx(first_law)
        assert abs(stats.first_pass_rate - first_law) < three_se(first_law, 4000)
        assert stats.second_pass_given_pass == 1.0
        assert stats.second_pass_given_fail == 0.0
        assert abs(stats.second_pass_given_pass - first_law) > 0.07
        assert abs(stats.second_pass_given_fail - first_law) > 0.9

    def test_records_one_row_per_overlap(self):
        rng = np.random.default_rng(34)
        result = single_use_constraint_check(50, rng)
        records = result.to_records()
        assert len(records) == 4
        assert [round(r["overlap"], 4) for r in records] == [
            1.0,
            round(math.cos(math.pi / 8), 4),
            round(math.cos(math.pi / 4), 4),
            0.0,
        ]

    def test_validation(self):
        with pytest.raises(ValueError, match="trials"):
            single_use_constraint_check(0, np.random.default_rng(1))


class TestChosenPlaintext:
    """Exact indistinguishability of ciphertext ensembles."""

    def test_single_bit_messages_indistinguishable(self):
        for n in (1, 4, 8, 12):
            report = chosen_plaintext_distinguishability(n, (0,), (1,))
            assert report.distance_between_messages < 1e-12
            assert report.distance_m0_to_public < 1e-12
            assert report.distance_m1_to_public < 1e-12

    def test_four_bit_messages_indistinguishable(self):
        rng = np.random.default_rng(41)
        for _ in range(5):
            m0 = tuple(int(b) for b in rng.integers(0, 2, size=4))
            m1 = tuple(int(b) for b in rng.integers(0, 2, size=4))
            report = chosen_plaintext_distinguishability(6, m0, m1)
            assert report.distance_between_messages < 1e-12

    def test_redundant_encoding_indistinguishable(self):
        report = chosen_plaintext_distinguishability(8, (0, 1), (1, 1), alpha=2)
        assert report.distance_between_messages < 1e-12
        assert report.distance_m0_to_public < 1e-12

    def test_record_fields(self):
        record = chosen_plaintext_distinguishability(4, (0, 1), (1, 0)).to_record()
        assert record["message_0"] == "01"
        assert record["message_1"] == "10"
        assert record["attack"] == "chosen_plaintext"

    def test_caps_and_validation(self):
        with pytest.raises(ValueError, match=str(CPA_PRECISION_CAP)):
            chosen_plaintext_distinguishability(CPA_PRECISION_CAP + 1, (0,), (1,))
        with pytest.raises(ValueError, match=str(CPA_TOTAL_QUBIT_CAP)):
            chosen_plaintext_distinguishability(4, (0,) * 5, (1,) * 5, alpha=2)
        with pytest.raises(ValueError, match="equal length"):
            chosen_plaintext_distinguishability(4, (0,), (1, 1))
        with pytest.raises(ValueError, match="bits"):
            chosen_plaintext_distinguishability(4, (2,), (1,))
        with pytest.raises(ValueError, match="alpha"):
            chosen_plaintext_distinguishability(4, (0,), (1,), alpha=0)


def fresh_copy(key: PrivateKey, copy_index: int = 1) -> PublicKey:
    return PublicKey(
        key_id=key_id_of(key),
        N=key.length,
        register=prepare_register(key),
        copy_index=copy_index,
    )


class TestChosenCiphertext:
    """Bounded-oracle sessions: transcripts, caps, and consumption."""

    def test_session_respects_use_budget(self):
        rng = np.random.default_rng(51)
        key, _ = keygen(8, N=3, rng=rng)
        submissions = []
        for i in range(6):
            cipher = encrypt(fresh_copy(key, i + 1), (1, 0, 1), rng=rng)
            submissions.append((f"probe-{i}", cipher))
        session = chosen_ciphertext_session(key, 4, submissions, rng)
        assert session.uses_allowed == 4
        assert session.uses_consumed == 4
        accepted = [s for s in session.transcript if s.accepted]
        rejected = [s for s in session.transcript if not s.accepted]
        assert len(accepted) == 4
        assert len(rejected) == 2
        assert all("inactive" in s.error for s in rejected)
        assert session.bits_received == 12
        assert session.information_ceiling_bits == 12.0

    def test_eve_encrypted_message_comes_back(self):
        rng = np.random.default_rng(52)
        key, _ = keygen(16, N=4, rng=rng)
        message = (1, 1, 0, 1)
        cipher = encrypt(fresh_copy(key), message, rng=rng)
        session = chosen_ciphertext_session(key, 1, [("known", cipher)], rng)
        assert session.transcript[0].accepted
        assert session.transcript[0].result == message

    def test_malformed_submission_consumes_nothing(self):
        rng = np.random.default_rng(53)
        key, _ = keygen(8, N=3, rng=rng)
        short_reg = QuantumRegister.of_computational((0, 0))
        bad = CipherState(register=short_reg, num_bits=2, alpha=1)
        good = encrypt(fresh_copy(key), (0, 1, 0), rng=rng)
        session = chosen_ciphertext_session(
            key, 2, [("bad", bad), ("good", good)], rng
        )
        assert not session.transcript[0].accepted
        assert session.transcript[0].error is not None
        assert session.transcript[1].accepted
        assert session.uses_consumed == 1

    def test_entangled_ancilla_submission_is_decrypted(self):
        rng = np.random.default_rng(54)
        key = PrivateKey(n=4, s=(2, 11))
        reg = QuantumRegister.of_computational((0, 0, 0))
        reg.apply_rotation(2, math.pi / 3)
        swap_test_registers(reg, 1, reg, 2, rng)
        front, back = reg.partition(2)
        cipher = CipherState(register=front, num_bits=2, alpha=1)
        session = chosen_ciphertext_session(key, 1, [("ancilla", cipher)], rng)
        assert session.transcript[0].accepted
        assert session.transcript[0].result is not None
        assert len(session.transcript[0].result) == 2
        assert back.qubit_count == 1

    def test_labels_are_digested(self):
        rng = np.random.default_rng(55)
        key, _ = keygen(8, N=2, rng=rng)
        cipher = encrypt(fresh_copy(key), (0, 0), rng=rng)
        session = chosen_ciphertext_session(key, 1, [("my-label", cipher)], rng)
        entry = session.transcript[0]
        assert entry.label == "my-label"
        assert len(entry.label_digest) == 16
        assert entry.label_digest != "my-label"
        assert isinstance(session, CcaSessionResult)

    def test_record_summary(self):
        rng = np.random.default_rng(56)
        key, _ = keygen(8, N=2, rng=rng)
        cipher = encrypt(fresh_copy(key), (1, 0), rng=rng)
        record = chosen_ciphertext_session(key, 2, [("x", cipher)], rng).to_record()
        assert record["attack"] == "chosen_ciphertext"
        assert record["accepted"] == 1
        assert record["uses_consumed"] == 1
        assert record["information_ceiling_bits"] == 4.0


class TestKeyRecovery:
    """Information gain and disturbance of intercept-and-measure."""

    def test_no_copies_no_information(self):
        rng = np.random.default_rng(61)
        report = key_recovery_baseline(62, 0, 100, rng)
        assert report.info is None
        assert report.information_bits == 0.0
        assert report.residual_entropy_bits == 62.0

    def test_single_copy_bounded_by_one_bit(self):
        rng = np.random.default_rng(62)
        report = key_recovery_baseline(4, 1, 8000, rng)
        assert report.info is not None
        assert report.information_bits <= 1.0 + 3.0 * report.info.stderr_bits
        assert report.information_bits > 0.05
        assert report.residual_entropy_bits == pytest.approx(
            4.0 - report.information_bits
        )

    def test_forward_fidelity_three_quarters(self):
        rng = np.random.default_rng(63)
        report = key_recovery_baseline(8, 0, 10, rng, disturbance_trials=20000)
        assert report.predicted_forward_fidelity == 0.75
        assert abs(report.mean_forward_fidelity - 0.75) < 0.015

    def test_single_bit_precision_is_undisturbed_in_aligned_basis(self):
        rng = np.random.default_rng(64)
        report = key_recovery_baseline(1, 0, 10, rng, disturbance_trials=2000)
        assert report.predicted_forward_fidelity == 1.0
        assert report.mean_forward_fidelity == 1.0

    def test_alternate_strategies_accepted(self):
        rng = np.random.default_rng(65)
        report = key_recovery_baseline(
            4, 2, 3000, rng, strategy=MeasurementStrategy.random()
        )
        assert report.copies == 2
        record = report.to_record()
        assert record["attack"] == "key_recovery"
        assert record["stderr_bits"] is not None

    def test_validation(self):
        rng = np.random.default_rng(1)
        with pytest.raises(ValueError, match="copies"):
            key_recovery_baseline(4, -1, 100, rng)
        with pytest.raises(ValueError, match="n must be"):
            key_recovery_baseline(63, 0, 100, rng)
        with pytest.raises(ValueError, match="disturbance"):
            key_recovery_baseline(4, 0, 100, rng, disturbance_trials=0)


class TestNoHiddenInformation:
    """Attack code must act through public operations only."""

    def test_attack_module_never_reads_descriptors(self):
        source = inspect.getsource(qpke.attacks)
        assert "describe_register" not in source
        assert "_owner_tag" not in source
        assert "._indices" not in source
        assert "._index_array" not in source

    def test_decision_rules_see_only_test_outcomes(self):
        signature = inspect.signature(identify_rotations)
        assert list(signature.parameters) == ["fails"]
        signature = inspect.signature(parity_from_fails)
        assert list(signature.parameters) == ["fails"]
