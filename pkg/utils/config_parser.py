import re
from typing import Tuple, Dict, Optional


class ConfigFileParser:
    @staticmethod
    def parse(raw_content: str) -> Tuple[bool, Dict[str, str], Optional[str]]:
        """
        Parse a flat ``key = value`` configuration text

        Args:
            raw_content: Text of the config file

        Returns:
            Tuple of (success: bool, values: dict of raw strings, error_message: Optional[str])
        """
        if raw_content is None or not isinstance(raw_content, str):
            return False, {}, "Empty or invalid content provided"

        values: Dict[str, str] = {}
        for line_number, line in enumerate(ConfigFileParser._clean_config_content(raw_content).splitlines(), 1):
            if not line:
                continue
            if "=" not in line:
                return False, values, f"line {line_number}: expected 'key = value', got {line!r}"
            key, value = (part.strip() for part in line.split("=", 1))
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", key):
                return False, values, f"line {line_number}: invalid key {key!r}"
            if key in values:
                return False, values, f"line {line_number}: duplicate key {key!r}"
            values[key] = value
        return True, values, None

    @staticmethod
    def parse_override(override: str) -> Tuple[str, str]:
        """Split a command-line ``key=value`` override"""
        success, values, error = ConfigFileParser.parse(override)
        if not success or len(values) != 1:
            raise ValueError(error or f"expected key=value, got {override!r}")
        return next(iter(values.items()))

    @staticmethod
    def _clean_config_content(raw_content: str) -> str:
        """
        Remove comments and surrounding whitespace

        Args:
            raw_content: Raw config text

        Returns:
            Text with one stripped (possibly empty) line per input line
        """
        cleaned = re.sub(r"#.*?$", "", raw_content, flags=re.MULTILINE)
        return "\n".join(line.strip() for line in cleaned.splitlines())
