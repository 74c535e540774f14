"""Command-line front end: key lifecycle, round trips, attack experiments,
security reports, and parameter sweeps with reproducible seeding.

Every run derives its randomness from one master 64-bit seed (flag, then the
QPKE_SEED environment variable, then fresh entropy) expanded into labeled
substreams, and every emitted data file carries the run id of the manifest
that produced it, so identical flags plus seed reproduce identical payloads
byte for byte.  Timestamps live only in the manifest file.

Exit codes: 0 success, 2 usage or validation, 3 I/O failure, 4 protocol
precondition violation.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .attacks import (
    chosen_ciphertext_session,
    chosen_plaintext_distinguishability,
    run_forward_search,
)
from .protocol import (
    CopyCapExceededError,
    DecryptionOracle,
    KeyRegistry,
    LowPrecisionWarning,
    MessageTooLongError,
    OracleDeactivatedError,
    decrypt,
    encrypt,
    key_fingerprint,
    key_id_of,
    keygen,
    load_private_key,
    save_private_key,
)
from .quantum_core import MAX_PRECISION_BITS, von_neumann_entropy
from .security_analysis import (
    KeyParams,
    MeasurementStrategy,
    ensemble_density,
    ensemble_density_method,
    estimate_mutual_information,
    secrecy_condition,
)
from .seeding import rng_stream

SCHEMA_VERSION = 1
SWEEP_CELL_CAP = 10000
SEED_ENV_VAR = "QPKE_SEED"
_SEED_MASK = (1 << 64) - 1


# --- manifests and output plumbing ---


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record for one CLI invocation.

    The run id hashes the command, parameters, seed, and tool version;
    the timestamp and output paths are recorded but excluded, so reruns
    with identical inputs share the run id and produce byte-identical
    data payloads.
    """

    command: str
    params: dict
    seed: int
    tool_version: str
    timestamp: str
    outputs: tuple[str, ...] = ()

    @property
    def run_id(self) -> str:
        canonical = json.dumps(
            {
                "command": self.command,
                "params": self.params,
                "seed": self.seed,
                "tool_version": self.tool_version,
            },
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def payload_header(self) -> dict:
        """Deterministic part embedded in every data file."""
        return {
            "command": self.command,
            "params": self.params,
            "run_id": self.run_id,
            "seed": self.seed,
            "tool_version": self.tool_version,
        }

    def to_json(self) -> dict:
        body = self.payload_header()
        body["timestamp"] = self.timestamp
        body["outputs"] = list(self.outputs)
        return body


def _make_manifest(command: str, params: dict, seed: int) -> RunManifest:
    return RunManifest(
        command=command,
        params=params,
        seed=seed,
        tool_version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def _resolve_seed(flag_value: int | None) -> tuple[int, str]:
    """Master seed and where it came from: flag, environment, or entropy."""
    if flag_value is not None:
        return flag_value & _SEED_MASK, "flag"
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env) & _SEED_MASK, "env"
        except ValueError:
            raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from None
    entropy = np.random.SeedSequence().entropy
    return int(entropy) & _SEED_MASK, "entropy"


def _write_json(path: str, manifest: RunManifest, results) -> None:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "manifest": manifest.payload_header(),
        "results": results,
    }
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_csv(path: str, fieldnames: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _write_manifest(path: str, manifest: RunManifest, outputs: list[str]) -> None:
    finished = dataclasses.replace(manifest, outputs=tuple(outputs))
    payload = {"schema_version": SCHEMA_VERSION, "manifest": finished.to_json()}
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _emit(args, manifest: RunManifest, results, csv_rows=None, csv_fields=None) -> None:
    """Write requested data files plus the cross-referencing manifest."""
    outputs = []
    json_path = getattr(args, "json", None)
    csv_path = getattr(args, "csv", None)
    if json_path:
        _write_json(json_path, manifest, results)
        outputs.append(json_path)
    if csv_path:
        _write_csv(csv_path, csv_fields, csv_rows)
        outputs.append(csv_path)
    manifest_path = getattr(args, "manifest", None)
    if manifest_path is None and outputs:
        manifest_path = outputs[0] + ".manifest.json"
    if manifest_path:
        _write_manifest(manifest_path, manifest, outputs)


# --- flag parsing helpers ---


def _parse_range(text: str, flag: str) -> tuple[int, int]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"{flag} must look like LOW:HIGH, got {text!r}")
    try:
        lo, hi = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(f"{flag} bounds must be integers, got {text!r}") from None
    return lo, hi


def _parse_message(text: str) -> tuple[int, ...]:
    """Message as bits ('0110') or hex ('0xD6', four bits per digit)."""
    if text.lower().startswith("0x"):
        digits = text[2:]
        if not digits or any(c not in "0123456789abcdefABCDEF" for c in digits):
            raise ValueError(f"invalid hex message {text!r}")
        width = 4 * len(digits)
        return tuple((int(digits, 16) >> (width - 1 - i)) & 1 for i in range(width))
    if text and all(c in "01" for c in text):
        return tuple(int(c) for c in text)
    raise ValueError(f"message must be bits or 0x-prefixed hex, got {text!r}")


# --- subcommands ---


def cmd_keygen(args) -> int:
    if (args.n is None) == (args.n_range is None):
        raise ValueError("exactly one of --n or --n-range is required")
    if args.n_range is not None:
        precision: int | tuple[int, int] = _parse_range(args.n_range, "--n-range")
    else:
        precision = args.n
    seed, seed_source = _resolve_seed(args.seed)
    rng = rng_stream(seed, "keygen")
    key, public = keygen(precision, args.N, permute=args.permute, rng=rng)
    registry = KeyRegistry()
    registry.add(key)

    save_private_key(key, args.out)
    params = {
        "n": args.n,
        "n_range": args.n_range,
        "N": args.N,
        "permute": args.permute,
    }
    manifest = _make_manifest("keygen", params, seed)
    _write_manifest(args.out + ".manifest.json", manifest, [args.out])
    print(f"key_id={public.key_id}")
    print(f"fingerprint={key_fingerprint(key)}")
    print(f"n={key.n} N={args.N} copy_cap={registry.copy_cap(public.key_id)}")
    print(f"seed={seed} ({seed_source}) run_id={manifest.run_id}")
    print(f"wrote {args.out}")
    return 0


def cmd_roundtrip(args) -> int:
    seed, seed_source = _resolve_seed(args.seed)
    key = load_private_key(args.key)
    message = _parse_message(args.message)
    registry = KeyRegistry()
    registry.add(key, copy_cap=1)
    public = registry.issue_copy(key_id_of(key))
    oracle = DecryptionOracle(key, uses_allowed=1)

    t0 = time.perf_counter()
    cipher = encrypt(public, message, alpha=args.alpha, rng=rng_stream(seed, "encrypt"))
    t1 = time.perf_counter()
    decoded = decrypt(oracle, cipher, rng_stream(seed, "decrypt"))
    t2 = time.perf_counter()

    match = decoded == message
    results = {
        "match": match,
        "num_bits": len(message),
        "alpha": args.alpha,
        "n": key.n,
        "N": key.length,
    }
    manifest = _make_manifest(
        "roundtrip",
        {"key": args.key, "message": args.message, "alpha": args.alpha},
        seed,
    )
    _emit(args, manifest, results)
    print(f"match={'true' if match else 'false'}")
    print(f"encrypt_ms={1e3 * (t1 - t0):.2f} decrypt_ms={1e3 * (t2 - t1):.2f}")
    print(f"seed={seed} ({seed_source}) run_id={manifest.run_id}")
    return 0 if match else 1


_ATTACK_FIELDS = [
    "attack",
    "alpha",
    "n",
    "N",
    "rule",
    "trials",
    "success_rate",
    "stderr",
    "theory",
    "seed",
    "run_id",
]


def _forward_search_records(args, seed: int, run_id: str) -> list[dict]:
    rng = rng_stream(seed, "attack", "forward-search")
    reports = run_forward_search(args.alpha, args.trials, rng, precision=args.n)
    rules = list(reports) if args.rule == "both" else [args.rule]
    records = []
    for rule in rules:
        report = reports[rule]
        records.append(
            {
                "attack": "forward-search",
                "alpha": report.alpha,
                "n": args.n,
                "N": report.alpha,
                "rule": rule,
                "trials": report.trials,
                "success_rate": report.success_rate,
                "stderr": report.stderr,
                "theory": report.predicted_rate,
                "seed": seed,
                "run_id": run_id,
            }
        )
    return records


def _cpa_records(args, seed: int, run_id: str) -> list[dict]:
    report = chosen_plaintext_distinguishability(
        args.n, (0,) * args.N, (1,) * args.N, alpha=args.alpha
    )
    worst = max(
        report.distance_between_messages,
        report.distance_m0_to_public,
        report.distance_m1_to_public,
    )
    return [
        {
            "attack": "cpa",
            "alpha": args.alpha,
            "n": args.n,
            "N": args.N,
            "rule": "trace-distance",
            "trials": 0,
            "success_rate": worst,
            "stderr": 0.0,
            "theory": 0.0,
            "seed": seed,
            "run_id": run_id,
        }
    ]


def _cca_records(args, seed: int, run_id: str) -> tuple[list[dict], dict]:
    rng = rng_stream(seed, "attack", "cca")
    with warnings.catch_warnings():
        # attack experiments run at reduced precision on purpose
        warnings.simplefilter("ignore", LowPrecisionWarning)
        key, _ = keygen(args.n, args.N, rng=rng)
    registry = KeyRegistry()
    registry.add(key, copy_cap=args.k + 2)
    submissions = []
    for i in range(args.k + 2):
        message = tuple(int(b) for b in rng.integers(0, 2, size=args.N))
        public = registry.issue_copy(key_id_of(key))
        cipher = encrypt(public, message, rng=rng)
        submissions.append((f"probe-{i}", cipher))
    session = chosen_ciphertext_session(key, args.k, submissions, rng)
    summary = session.to_record()
    summary["seed"] = seed
    summary["run_id"] = run_id
    detail = {
        "session": summary,
        "transcript": [
            {
                "label": entry.label,
                "label_digest": entry.label_digest,
                "accepted": entry.accepted,
                "result": None if entry.result is None else list(entry.result),
                "error": entry.error,
            }
            for entry in session.transcript
        ],
    }
    row = {
        "attack": "cca",
        "alpha": 1,
        "n": args.n,
        "N": args.N,
        "rule": f"uses:{session.uses_consumed}/{session.uses_allowed}",
        "trials": len(session.transcript),
        "success_rate": session.uses_consumed / max(session.uses_allowed, 1),
        "stderr": 0.0,
        "theory": 1.0,
        "seed": seed,
        "run_id": run_id,
    }
    return [row], detail


def cmd_attack(args) -> int:
    seed, seed_source = _resolve_seed(args.seed)
    params = {
        "attack": args.attack,
        "alpha": args.alpha,
        "n": args.n,
        "N": args.N,
        "k": args.k,
        "trials": args.trials,
        "rule": args.rule,
    }
    manifest = _make_manifest("attack", params, seed)
    if args.attack == "forward-search":
        rows = _forward_search_records(args, seed, manifest.run_id)
        results: object = rows
    elif args.attack == "cpa":
        rows = _cpa_records(args, seed, manifest.run_id)
        results = rows
    else:
        rows, results = _cca_records(args, seed, manifest.run_id)
    _emit(args, manifest, results, csv_rows=rows, csv_fields=_ATTACK_FIELDS)
    for row in rows:
        print(
            f"{row['attack']} rule={row['rule']} observed={row['success_rate']:.6g} "
            f"theory={row['theory']:.6g}"
        )
    print(f"seed={seed} ({seed_source}) run_id={manifest.run_id}")
    return 0


def cmd_analyze(args) -> int:
    seed, seed_source = _resolve_seed(args.seed)
    n_l, n_u = _parse_range(args.n_range, "--n-range")
    params = KeyParams(n_l, n_u, args.N, args.k)
    report = secrecy_condition(params, threshold=args.threshold)
    records = report.to_records()
    if args.mi_strategy != "none":
        strategy = (
            MeasurementStrategy.fixed(0.0)
            if args.mi_strategy == "fixed"
            else MeasurementStrategy.random()
        )
        estimate = estimate_mutual_information(
            strategy,
            args.mi_n,
            args.mi_copies,
            args.trials,
            rng_stream(seed, "analyze", "mi"),
        )
        records.append(estimate.to_record())
    manifest = _make_manifest(
        "analyze",
        {
            "n_range": args.n_range,
            "N": args.N,
            "k": args.k,
            "threshold": args.threshold,
            "mi_strategy": args.mi_strategy,
            "mi_n": args.mi_n,
            "mi_copies": args.mi_copies,
            "trials": args.trials,
        },
        seed,
    )
    fields = ["quantity", "value_bits", "stderr_bits", "satisfied", "run_id"]
    rows = [
        {
            "quantity": r["quantity"],
            "value_bits": r["value_bits"],
            "stderr_bits": r["stderr_bits"],
            "satisfied": r["satisfied"],
            "run_id": manifest.run_id,
        }
        for r in records
    ]
    _emit(args, manifest, records, csv_rows=rows, csv_fields=fields)
    margin = "inf" if math.isinf(report.margin) else f"{report.margin:.4f}"
    print(f"H(d)={report.key_entropy_bits:.4f} bits cap={report.holevo_cap_bits:.1f} bits")
    print(
        f"margin={margin} threshold={report.threshold:g} "
        f"satisfied={'true' if report.satisfied else 'false'}"
    )
    print(f"seed={seed} ({seed_source}) run_id={manifest.run_id}")
    return 0


def cmd_sweep(args) -> int:
    seed, seed_source = _resolve_seed(args.seed)
    if args.experiment == "forward-search":
        lo, hi = _parse_range(args.alphas, "--alphas")
        cells = list(range(lo, hi + 1))
        grid_flag = "--alphas"
    else:
        lo, hi = _parse_range(args.n, "--n")
        cells = [n for n in range(lo, hi + 1) if n >= 1]
        grid_flag = "--n"
    if not cells or lo < 1:
        raise ValueError(f"{grid_flag} {lo}:{hi} spans no valid cells")
    if len(cells) > SWEEP_CELL_CAP:
        raise ValueError(
            f"grid has {len(cells)} cells; the cap is {SWEEP_CELL_CAP}"
        )

    manifest = _make_manifest(
        "sweep",
        {
            "experiment": args.experiment,
            "grid": f"{lo}:{hi}",
            "trials": args.trials,
            "rule": args.rule,
        },
        seed,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"sweep-{args.experiment}.csv"

    if args.experiment == "forward-search":
        fields = [
            "experiment",
            "alpha",
            "rule",
            "trials",
            "success_rate",
            "stderr",
            "theory",
            "deviation",
            "seed",
            "run_id",
        ]
        rows = []
        for alpha in cells:
            rng = rng_stream(seed, "sweep", "forward-search", alpha)
            reports = run_forward_search(alpha, args.trials, rng)
            rules = list(reports) if args.rule == "both" else [args.rule]
            for rule in rules:
                report = reports[rule]
                rows.append(
                    {
                        "experiment": "forward-search",
                        "alpha": alpha,
                        "rule": rule,
                        "trials": report.trials,
                        "success_rate": report.success_rate,
                        "stderr": report.stderr,
                        "theory": report.predicted_rate,
                        "deviation": report.deviation,
                        "seed": seed,
                        "run_id": manifest.run_id,
                    }
                )
    else:
        fields = [
            "experiment",
            "n",
            "method",
            "max_abs_deviation",
            "entropy_bits",
            "seed",
            "run_id",
        ]
        rows = []
        for n in cells:
            rho = ensemble_density(n)
            deviation = float(np.abs(rho.entries - np.eye(2) / 2.0).max())
            rows.append(
                {
                    "experiment": "ensemble",
                    "n": n,
                    "method": ensemble_density_method(n),
                    "max_abs_deviation": deviation,
                    "entropy_bits": von_neumann_entropy(rho),
                    "seed": seed,
                    "run_id": manifest.run_id,
                }
            )

    _write_csv(str(csv_path), fields, rows)
    _write_manifest(str(csv_path) + ".manifest.json", manifest, [str(csv_path)])
    print(f"wrote {csv_path} ({len(rows)} rows)")
    print(f"seed={seed} ({seed_source}) run_id={manifest.run_id}")
    return 0


# --- parser and entry points ---


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpke",
        description="Rotation-based quantum public-key cryptosystem simulator.",
    )
    parser.add_argument("--version", action="version", version=f"qpke {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="draw a key pair and write the private key")
    p.add_argument("--n", type=int, default=None, help="fixed precision in bits")
    p.add_argument("--n-range", default=None, help="precision range LOW:HIGH")
    p.add_argument("--N", type=int, default=256, help="key length in qubits")
    p.add_argument("--permute", action="store_true", help="add a secret permutation")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="private-key file to write")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("roundtrip", help="encrypt then decrypt one message")
    p.add_argument("--key", required=True, help="private-key file from keygen")
    p.add_argument("--message", required=True, help="bits ('0110') or hex ('0xd6')")
    p.add_argument("--alpha", type=int, default=1, help="qubits per message bit")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--json", default=None, help="write the report as JSON")
    p.add_argument("--manifest", default=None, help="manifest path override")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("attack", help="run one adversary experiment")
    p.add_argument(
        "--attack",
        required=True,
        choices=["forward-search", "cpa", "cca"],
        help="which experiment to run",
    )
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--n", type=int, default=8, help="key precision in bits")
    p.add_argument("--N", type=int, default=2, help="key length in qubits")
    p.add_argument("--k", type=int, default=4, help="oracle use budget (cca)")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument(
        "--rule",
        choices=["identify-all", "parity-aware", "both"],
        default="both",
        help="forward-search decision rule",
    )
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--json", default=None, help="write the report as JSON")
    p.add_argument("--csv", default=None, help="write report rows as CSV")
    p.add_argument("--manifest", default=None, help="manifest path override")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("analyze", help="entropy, Holevo cap, and secrecy margin")
    p.add_argument("--n-range", default="32:62", help="precision range LOW:HIGH")
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--k", type=int, default=16, help="public copies issued")
    p.add_argument("--threshold", type=float, default=100.0)
    p.add_argument(
        "--mi-strategy",
        choices=["none", "fixed", "random"],
        default="none",
        help="optionally estimate measured information per key entry",
    )
    p.add_argument("--mi-n", type=int, default=8, help="precision for the estimate")
    p.add_argument("--mi-copies", type=int, default=1, help="copies per trial")
    p.add_argument("--trials", type=int, default=20000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--json", default=None, help="write the report as JSON")
    p.add_argument("--csv", default=None, help="write report rows as CSV")
    p.add_argument("--manifest", default=None, help="manifest path override")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="parameter sweep to a CSV matrix")
    p.add_argument(
        "--experiment",
        required=True,
        choices=["forward-search", "ensemble"],
    )
    p.add_argument("--alphas", default="1:4", help="alpha grid LOW:HIGH")
    p.add_argument("--n", default="1:16", help="precision grid LOW:HIGH")
    p.add_argument("--trials", type=int, default=20000)
    p.add_argument(
        "--rule",
        choices=["identify-all", "parity-aware", "both"],
        default="both",
    )
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except MessageTooLongError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (CopyCapExceededError, OracleDeactivatedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
