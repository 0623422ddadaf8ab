"""Fetch MNIST-format datasets for desk-scale experiments.
=========================================================

Downloads the gzipped IDX files of the digit set ("mnist") and the
fashion-item set ("fashion") into DATA_DIR (default ./data). The loaders
read the .gz files directly, so there is nothing to unpack.

Run with:
    python scripts/fetch_datasets.py
    python scripts/fetch_datasets.py --dataset fashion --force
"""

import argparse
import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT))

from src.config import ConfigError, load_settings  # noqa: E402
from src.harness.download import DATASETS, fetch_dataset  # noqa: E402
from src.utils.logger import setup_logging  # noqa: E402


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Download MNIST-format IDX datasets.")
    parser.add_argument(
        "--dataset",
        choices=[*DATASETS, "all"],
        default="all",
        help="Which dataset to fetch (default: all).",
    )
    parser.add_argument("--data-dir", default=None, help="Target directory (default: DATA_DIR or ./data).")
    parser.add_argument("--force", action="store_true", help="Re-download files that already exist.")
    return parser.parse_args()


def main() -> None:
    args = parse_args()
    try:
        settings = load_settings()
    except ConfigError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        sys.exit(1)
    setup_logging(settings.log_level, settings.log_file)

    names = list(DATASETS) if args.dataset == "all" else [args.dataset]
    for name in names:
        for path in fetch_dataset(name, args.data_dir or settings.data_dir, force=args.force):
            print(path)


if __name__ == "__main__":
    main()
