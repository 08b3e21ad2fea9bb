"""Tests for lib/utils.py functions."""
import sys
from pathlib import Path

import numpy as np

# Add project root to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from lib.utils import (
    THREADS_ENV_VAR,
    canonical_json,
    config_hash,
    log_jamming,
    message_processor,
    set_quiet,
    substream,
    substream_seed,
    worker_count,
)


class TestLogJamming:
    """Tests for log_jamming function."""

    def test_formats_short_message(self):
        """Short messages should be returned with minimal formatting."""
        result = log_jamming("Test message")

        assert result == "Test message"

    def test_formats_long_message_with_wrapping(self):
        """Long messages should be wrapped at 90 chars with proper indentation."""
        result = log_jamming("residual " * 30)

        lines = result.split('\n')
        assert len(lines[0]) <= 90
        assert len(lines) > 1
        assert all(line.startswith(' ' * 34) for line in lines[1:])

    def test_empty_message(self):
        """Empty string should be handled gracefully."""
        assert log_jamming("") == ""


class TestMessageProcessor:
    """Console prefixes and log levels."""

    def test_prefixes(self, capsys):
        """Each message type gets its console prefix."""
        message_processor("loaded", "info")
        message_processor("careful", "warning")
        message_processor("broken", "error")
        message_processor("F = 0.5", "result")
        out = capsys.readouterr().out.splitlines()
        assert out == ["[i]\tloaded", "[!?]\tcareful", "[!]\tbroken", "[>]\tF = 0.5"]

    def test_logs_at_matching_level(self, mocker):
        """Warnings go to logging.warning."""
        mock_warning = mocker.patch("lib.utils.logging.warning")
        message_processor("careful", "warning", print_me=False)
        mock_warning.assert_called_once_with("careful")

    def test_result_logged_as_info(self, mocker):
        """Results are logged at INFO."""
        mock_info = mocker.patch("lib.utils.logging.info")
        message_processor("done", "result", print_me=False)
        mock_info.assert_called_once_with("done")

    def test_quiet_suppresses_console(self, capsys):
        """Quiet mode prints nothing."""
        set_quiet(True)
        try:
            message_processor("hidden")
        finally:
            set_quiet(False)
        assert capsys.readouterr().out == ""

    def test_set_quiet_returns_previous_setting(self):
        """set_quiet reports the setting it replaced so callers can restore it."""
        assert set_quiet(True) is False
        assert set_quiet(False) is True
        assert set_quiet(False) is False


class TestConfigHash:
    """Canonical hashing of configuration documents."""

    def test_key_order_irrelevant(self):
        """Key order does not change the hash."""
        assert config_hash({"a": 1, "b": {"c": 2, "d": 3}}) == config_hash(
            {"b": {"d": 3, "c": 2}, "a": 1}
        )

    def test_integer_and_float_equal(self):
        """23 and 23.0 hash the same."""
        assert config_hash({"t1": 23}) == config_hash({"t1": 23.0})

    def test_negative_zero(self):
        """Negative zero serializes as zero."""
        assert canonical_json({"phi": -0.0}) == canonical_json({"phi": 0.0})

    def test_output_and_logging_excluded(self):
        """Output and logging sections are left out of the hash."""
        base = {"seed": 1, "output": {"path": "a.csv"}, "logging": {"level": "INFO"}}
        other = {"seed": 1, "output": {"path": "b.csv"}, "logging": {"level": "DEBUG"}}
        assert config_hash(base) == config_hash(other)

    def test_meaningful_change(self):
        """A physical change changes the hash."""
        assert config_hash({"cz_errors": {"lam": 0.0}}) != config_hash({"cz_errors": {"lam": 0.01}})

    def test_hex_digest(self):
        """The hash is a 64-character hex digest."""
        digest = config_hash({})
        assert len(digest) == 64
        int(digest, 16)


class TestWorkerCount:
    """QMELAB_THREADS handling."""

    def test_unset_uses_cpus(self, monkeypatch, mocker):
        """Without QMELAB_THREADS every CPU is used."""
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        mocker.patch("lib.utils.psutil.cpu_count", return_value=6)
        assert worker_count() == 6

    def test_zero_means_auto(self, monkeypatch, mocker):
        """Zero means one worker per CPU."""
        monkeypatch.setenv(THREADS_ENV_VAR, "0")
        mocker.patch("lib.utils.psutil.cpu_count", return_value=3)
        assert worker_count() == 3

    def test_explicit_cap(self, monkeypatch):
        """A positive value caps the worker count."""
        monkeypatch.setenv(THREADS_ENV_VAR, "2")
        assert worker_count() == 2

    def test_garbage_ignored(self, monkeypatch, mocker):
        """Unparseable values fall back to the CPU count."""
        monkeypatch.setenv(THREADS_ENV_VAR, "many")
        mocker.patch("lib.utils.psutil.cpu_count", return_value=4)
        assert worker_count() == 4


class TestSubstreams:
    """Seed derivation."""

    def test_same_key_same_stream(self):
        """The same key gives the same stream."""
        a = substream(5, 0, 1, 2).random(4)
        b = substream(5, 0, 1, 2).random(4)
        assert np.array_equal(a, b)

    def test_different_keys_differ(self):
        """Different keys or master seeds give different streams."""
        assert substream(5, 0, 1, 2).random() != substream(5, 0, 2, 1).random()
        assert substream(5, 0).random() != substream(6, 0).random()

    def test_seed_is_32_bit(self):
        """Substream seeds are stable 32-bit integers."""
        seed = substream_seed(20210301, 0, 1, 3)
        assert 0 <= seed < 2 ** 32
        assert seed == substream_seed(20210301, 0, 1, 3)
