"""
File management service for loading and saving JSON artifacts.
"""

import json
import logging
import os
from typing import Any, Optional

logger = logging.getLogger(__name__)


class FileManager:
    """
    Handles loading and saving of JSON files (suites, checkpoints, summaries).
    """

    @staticmethod
    def load_json(filepath: str, default: Optional[Any] = None) -> Any:
        """
        Load data from a JSON file.

        Args:
            filepath: Path to the JSON file
            default: Value returned when the file does not exist; when None a
                missing file raises FileNotFoundError

        Returns:
            Parsed JSON data or default value

        Raises:
            FileNotFoundError: If the file is missing and no default is given
            ValueError: If the file is not valid JSON
        """
        if not os.path.exists(filepath):
            if default is not None:
                return default
            raise FileNotFoundError(f"file not found: {filepath}")

        try:
            with open(filepath, 'r', encoding='utf-8') as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            logger.error("Error loading %s: %s", filepath, e)
            raise ValueError(f"invalid JSON in {filepath}: {e}") from e

    @staticmethod
    def save_json(filepath: str, data: Any, indent: int = 2) -> None:
        """
        Save data to a JSON file, creating parent directories.

        Floats are written with Python's shortest round-trip repr, so a
        reload is bit-exact.

        Raises:
            OSError: If the file cannot be written
        """
        directory = os.path.dirname(filepath)
        if directory:
            os.makedirs(directory, exist_ok=True)
        try:
            with open(filepath, 'w', encoding='utf-8') as f:
                json.dump(data, f, ensure_ascii=False, indent=indent, allow_nan=False)
        except (OSError, TypeError, ValueError) as e:
            logger.error("Error saving %s: %s", filepath, e)
            raise

    @staticmethod
    def save_text(filepath: str, text: str) -> None:
        directory = os.path.dirname(filepath)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(filepath, 'w', encoding='utf-8', newline='') as f:
            f.write(text)

    @staticmethod
    def load_text(filepath: str) -> str:
        with open(filepath, 'r', encoding='utf-8') as f:
            return f.read()

    @staticmethod
    def ensure_dir(path: str) -> str:
        os.makedirs(path, exist_ok=True)
        return path
