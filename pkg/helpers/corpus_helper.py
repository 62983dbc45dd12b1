import logging
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from exceptions import ManifestFormatError, UnknownLabel
from models import Corpus, SampleRecord
from services.dataset_service import DatasetService, LabelMapping

logger = logging.getLogger(__name__)

_SAVEE_ID = re.compile(r"^(?:[A-Za-z]{2}_)?([a-z]+)\d+$")


class CorpusHelper:
    """Helper class for the file-naming conventions of the supported corpora"""

    def __init__(self, codes_path: Optional[Union[str, Path]] = None,
                 mapping: Optional[LabelMapping] = None):
        from config import get_env_config

        self.codes_path = str(codes_path or get_env_config().filename_codes_path)
        self.codes = self._load_codes(self.codes_path)
        self.mapping = mapping or DatasetService.load_label_mapping()
        logger.info(f"Loaded filename codes for {len(self.codes)} corpora from {self.codes_path}")

    @staticmethod
    def _load_codes(path: str) -> Dict[Corpus, Dict[str, str]]:
        codes: Dict[Corpus, Dict[str, str]] = {}
        for line_number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3:
                raise ManifestFormatError(f"line {line_number}: expected corpus,code,raw_label", path=path)
            codes.setdefault(Corpus(parts[0]), {})[parts[1]] = parts[2]
        return codes

    def decode_filename(self, corpus: Union[Corpus, str], path: Union[str, Path]) -> str:
        """
        Extract the corpus' raw emotion label from a file path

        Args:
            corpus: Corpus the file belongs to
            path: WAV path; for ``other`` the parent directory names the emotion

        Returns:
            Raw label as the corpus spells it
        """
        corpus = Corpus(corpus)
        path = Path(path)
        stem = path.stem

        if corpus == Corpus.OTHER:
            return path.parent.name.lower()

        if corpus == Corpus.EMODB:
            code = stem[5] if len(stem) > 5 else ""
        elif corpus == Corpus.EMOVO:
            code = stem.split("-", 1)[0].lower()
        elif corpus == Corpus.SAVEE:
            match = _SAVEE_ID.match(stem)
            code = match.group(1) if match else ""
        else:
            fields = stem.split("-")
            code = fields[2] if len(fields) >= 3 else ""

        table = self.codes.get(corpus, {})
        if code not in table:
            raise UnknownLabel(f"unrecognized {corpus.value} file name (code {code!r})", path=str(path))
        return table[code]

    def index_corpus(self, root: Union[str, Path],
                     corpus: Union[Corpus, str]) -> Tuple[List[Tuple[Path, SampleRecord]], List[str]]:
        """
        Scan a corpus directory for WAV files

        Returns:
            Tuple of ((absolute path, record) pairs sorted by path, failure messages).
            record.audio_path holds the absolute path until the caller relativizes it;
            files whose label cannot be decoded or mapped are skipped and reported.
        """
        corpus = Corpus(corpus)
        root = Path(root)
        if not root.is_dir():
            raise ManifestFormatError("corpus directory does not exist", path=str(root))

        results, failures = [], []
        for wav in sorted(p for p in root.rglob("*") if p.suffix.lower() == ".wav"):
            try:
                raw_label = self.decode_filename(corpus, wav)
                label = self.mapping.map(corpus, raw_label)
            except UnknownLabel as e:
                logger.warning(f"Skipping {wav}: {e.message}")
                failures.append(f"{wav}: {e.message}")
                continue
            record = SampleRecord(
                audio_path=str(wav.resolve()),
                corpus=corpus,
                raw_label=raw_label,
                label=label,
            )
            results.append((wav.resolve(), record))

        logger.info(f"Indexed {len(results)} {corpus.value} files under {root}")
        return results, failures
