"""Tests for configuration module"""

import pytest
from picost.config import (
    CORPUS_DIR, LOGS_DIR,
    get_corpus_file, get_log_file
)


class TestConfig:
    """Test configuration settings"""

    def test_base_directories_exist(self):
        """Test that base directories are created"""
        assert LOGS_DIR.exists()
        assert CORPUS_DIR.exists()

    def test_get_log_file(self):
        """Test log file path generation"""
        log_file = get_log_file("test_component")
        assert log_file.parent == LOGS_DIR
        assert log_file.name == "test_component.log"

    def test_get_corpus_file(self):
        """Test shipped corpus lookup"""
        path = get_corpus_file("library.picost")
        assert path.parent == CORPUS_DIR
        assert path.exists()

    def test_get_corpus_file_missing(self):
        """Test missing corpus files are reported"""
        with pytest.raises(FileNotFoundError):
            get_corpus_file("no_such_file.json")

    def test_environment_variables(self):
        """Test environment variable loading"""
        # These should work with or without .env file
        from picost.config import LOG_LEVEL, CREDIT_CAP, TAU_DEPTH, STATE_CAP
        assert LOG_LEVEL in ["DEBUG", "INFO", "WARNING", "ERROR"]
        assert isinstance(CREDIT_CAP, int)
        assert TAU_DEPTH > 0
        assert STATE_CAP > 0
        from picost.config import WITNESS_CLOSURE
        assert WITNESS_CLOSURE >= 0
