"""Command-line entry: ``python -m pike_worker --tasks <dir>``."""

import argparse

from .server import DEFAULT_SETUP_TIMEOUT_S, WorkerServer


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pike_worker",
        description=(
            "Evaluation worker: answers NDJSON evaluate requests on stdin "
            "by compiling, checking, and timing candidate programs."
        ),
    )
    parser.add_argument(
        "--tasks",
        default="tasks",
        help="directory containing one sub-directory per task (default: tasks)",
    )
    parser.add_argument(
        "--setup-timeout",
        type=float,
        default=DEFAULT_SETUP_TIMEOUT_S,
        help="seconds allowed for imports and gold-output setup per request",
    )
    args = parser.parse_args(argv)
    WorkerServer(args.tasks, setup_timeout_s=args.setup_timeout).serve()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
