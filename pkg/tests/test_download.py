"""Tests for src/harness/download.py."""

from unittest.mock import MagicMock, patch

import pytest
import requests

from src.config import ConfigError
from src.harness import download
from src.harness.download import FILES, fetch_dataset


def _response(content=b"payload"):
    resp = MagicMock()
    resp.content = content
    resp.raise_for_status.return_value = None
    return resp


@patch("src.harness.download.requests.get")
def test_fetches_all_files(mock_get, tmp_path):
    mock_get.return_value = _response()
    paths = fetch_dataset("mnist", tmp_path)
    assert [p.name for p in paths] == list(FILES)
    assert all(p.read_bytes() == b"payload" for p in paths)
    assert mock_get.call_args_list[0].args[0].startswith(download.DATASETS["mnist"])


@patch("src.harness.download.requests.get")
def test_existing_files_are_kept(mock_get, tmp_path):
    mock_get.return_value = _response()
    (tmp_path / "fashion").mkdir()
    (tmp_path / "fashion" / FILES[0]).write_bytes(b"old")
    fetch_dataset("fashion", tmp_path)
    assert mock_get.call_count == 3
    assert (tmp_path / "fashion" / FILES[0]).read_bytes() == b"old"

    fetch_dataset("fashion", tmp_path, force=True)
    assert (tmp_path / "fashion" / FILES[0]).read_bytes() == b"payload"


@patch("src.harness.download.requests.get")
def test_transient_errors_are_retried(mock_get, tmp_path):
    mock_get.side_effect = [requests.ConnectionError("reset"), _response(b"ok")]
    with patch.object(download._fetch.retry, "sleep", lambda _: None):
        assert download._fetch("http://example.invalid/x") == b"ok"
    assert mock_get.call_count == 2


@patch("src.harness.download.requests.get")
def test_gives_up_after_three_attempts(mock_get):
    mock_get.side_effect = requests.ConnectionError("down")
    with patch.object(download._fetch.retry, "sleep", lambda _: None):
        with pytest.raises(requests.ConnectionError):
            download._fetch("http://example.invalid/x")
    assert mock_get.call_count == 3


def test_unknown_dataset(tmp_path):
    with pytest.raises(ConfigError):
        fetch_dataset("cifar10", tmp_path)
