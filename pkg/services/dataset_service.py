import logging
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple, Union

import numpy as np
from pydantic import ValidationError

from exceptions import ClassTooSmall, ManifestFormatError, UnknownLabel
from models import ClassDistribution, Corpus, DatasetManifest, EmotionLabel, SampleRecord, Split
from services.dataset_helper import DatasetHelper
from templates import ReportTemplates

logger = logging.getLogger(__name__)

TEST_FRACTION = Fraction(1, 5)
VAL_FRACTION = Fraction(1, 5)
MIN_STRATIFIABLE = 5

PathLike = Union[str, Path]


class LabelMapping:
    """Source label table loaded from a ``corpus,raw_label,emotion`` file"""

    def __init__(self, table: Dict[Tuple[Corpus, str], EmotionLabel], source: str = ""):
        self.table = table
        self.source = source

    @classmethod
    def load(cls, path: PathLike) -> "LabelMapping":
        table: Dict[Tuple[Corpus, str], EmotionLabel] = {}
        text = Path(path).read_text(encoding="utf-8")
        for line_number, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3:
                raise ManifestFormatError(f"line {line_number}: expected corpus,raw_label,emotion", path=str(path))
            try:
                corpus, emotion = Corpus(parts[0]), EmotionLabel.parse(parts[2])
            except ValueError as e:
                raise ManifestFormatError(f"line {line_number}: {e}", path=str(path))
            table[(corpus, parts[1].lower())] = emotion
        logger.debug(f"Loaded {len(table)} label mappings from {path}")
        return cls(table, source=str(path))

    def map(self, corpus: Union[Corpus, str], raw_label: str) -> EmotionLabel:
        corpus = Corpus(corpus)
        try:
            return self.table[(corpus, raw_label.strip().lower())]
        except KeyError:
            raise UnknownLabel(f"no mapping for {corpus.value} label {raw_label!r}", path=self.source or None)

    def label_set(self, corpus: Union[Corpus, str]) -> Set[str]:
        corpus = Corpus(corpus)
        return {raw for (c, raw) in self.table if c == corpus}


_mapping_cache: Dict[str, LabelMapping] = {}


class DatasetService:
    """Corpus manifest bookkeeping, label mapping and stratified splitting"""

    @staticmethod
    def load_label_mapping(path: Optional[PathLike] = None) -> LabelMapping:
        from config import get_env_config

        path = str(path or get_env_config().mapping_path)
        if path not in _mapping_cache:
            _mapping_cache[path] = LabelMapping.load(path)
        return _mapping_cache[path]

    @staticmethod
    def map_source_label(corpus: Union[Corpus, str], raw_label: str,
                         mapping: Optional[LabelMapping] = None) -> EmotionLabel:
        """Map a corpus-specific label onto the 8 classes; unknown labels raise UnknownLabel"""
        mapping = mapping or DatasetService.load_label_mapping()
        return mapping.map(corpus, raw_label)

    @staticmethod
    def class_distribution(manifest: DatasetManifest) -> ClassDistribution:
        """Counts and percentages over the original (non-augmented) records"""
        originals = manifest.originals()
        counts = {label: 0 for label in EmotionLabel}
        for record in originals:
            counts[record.label] += 1
        total = len(originals)
        percentages = {label: DatasetHelper.percentage(count, total) for label, count in counts.items()}
        return ClassDistribution(counts=counts, percentages=percentages, total=total)

    @staticmethod
    def split_counts(manifest: DatasetManifest) -> Dict[Split, int]:
        counts = {split: 0 for split in Split}
        for record in manifest.records:
            counts[record.split] += 1
        return counts

    @staticmethod
    def split_dataset(manifest: DatasetManifest, seed: int) -> Tuple[DatasetManifest, List[ClassTooSmall]]:
        """
        Stratified test / validation / train assignment

        20% of each class goes to test (global test count round(0.2 N)), 20% of the
        remaining pool to validation, the rest to train. Classes with fewer than 5
        records are reported and split best-effort.

        Args:
            manifest: Manifest of unassigned, non-augmented records
            seed: Shuffle seed

        Returns:
            Tuple of (new manifest, list of ClassTooSmall problems)
        """
        for record in manifest.records:
            if record.is_augmented or record.split != Split.UNASSIGNED:
                raise ValueError(f"split_dataset needs unassigned originals, got {record.audio_path} "
                                 f"({record.split.value}, augmented={record.is_augmented})")

        by_class: Dict[EmotionLabel, List[int]] = {label: [] for label in EmotionLabel}
        for index, record in enumerate(manifest.records):
            by_class[record.label].append(index)

        problems: List[ClassTooSmall] = []
        for label, indices in by_class.items():
            if 0 < len(indices) < MIN_STRATIFIABLE:
                problem = ClassTooSmall(f"class {label.display_name} has {len(indices)} records, "
                                        f"fewer than {MIN_STRATIFIABLE}; split is best-effort")
                logger.warning(str(problem))
                problems.append(problem)

        present = {label: len(indices) for label, indices in by_class.items() if indices}
        test_counts = DatasetHelper.allocate_split_counts(present, TEST_FRACTION)
        pool_counts = {label: present[label] - test_counts[label] for label in present}
        val_counts = DatasetHelper.allocate_split_counts(pool_counts, VAL_FRACTION)

        rng = np.random.default_rng(seed)
        assignment: Dict[int, Split] = {}
        for label in present:
            # Stable base order so the permutation alone decides membership
            indices = sorted(by_class[label], key=lambda i: manifest.records[i].audio_path)
            shuffled = [indices[i] for i in rng.permutation(len(indices))]
            n_test, n_val = test_counts[label], val_counts[label]
            for position, index in enumerate(shuffled):
                if position < n_test:
                    assignment[index] = Split.TEST
                elif position < n_test + n_val:
                    assignment[index] = Split.VAL
                else:
                    assignment[index] = Split.TRAIN

        records = [record.model_copy(update={"split": assignment[i]}) for i, record in enumerate(manifest.records)]
        result = DatasetManifest(records=records, seed=seed)
        counts = DatasetService.split_counts(result)
        logger.info(f"Split {len(records)} records: {counts[Split.TRAIN]} train, "
                    f"{counts[Split.VAL]} val, {counts[Split.TEST]} test")
        return result, problems

    @staticmethod
    def reset_splits(manifest: DatasetManifest) -> DatasetManifest:
        """Drop augmented records and unassign every original"""
        records = [r.model_copy(update={"split": Split.UNASSIGNED}) for r in manifest.originals()]
        return DatasetManifest(records=records, seed=manifest.seed)

    @staticmethod
    def attach_augmented(manifest: DatasetManifest, augmented: List[SampleRecord]) -> DatasetManifest:
        for record in augmented:
            if not record.is_augmented or record.split != Split.TRAIN:
                raise ValueError(f"{record.image_path} is not an augmented training record")
        return DatasetManifest(records=manifest.records + list(augmented), seed=manifest.seed)

    @staticmethod
    def write_manifest(manifest: DatasetManifest, path: PathLike) -> None:
        """Atomic CSV write (temp file + rename); commas in paths are rejected"""
        lines = [ReportTemplates.MANIFEST_HEADER]
        for record in manifest.records:
            for value in (record.audio_path, record.image_path or "", record.raw_label):
                if "," in value or "\n" in value:
                    raise ManifestFormatError(f"commas and newlines are not allowed in manifest fields: {value!r}")
            lines.append(",".join([
                record.audio_path,
                record.image_path or "",
                record.corpus.value,
                record.raw_label,
                record.label.display_name,
                record.split.value,
                "true" if record.is_augmented else "false",
            ]))
        text = "\n".join(lines) + "\n"

        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=str(path.parent), prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
                handle.write(text)
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise

    @staticmethod
    def read_manifest(path: PathLike) -> DatasetManifest:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ManifestFormatError(f"cannot read manifest: {e.strerror}", path=str(path))

        lines = text.splitlines()
        if not lines or lines[0] != ReportTemplates.MANIFEST_HEADER:
            raise ManifestFormatError(f"expected header {ReportTemplates.MANIFEST_HEADER!r}", path=str(path))

        records = []
        for line_number, line in enumerate(lines[1:], 2):
            if not line.strip():
                continue
            fields = line.split(",")
            if len(fields) != 7:
                raise ManifestFormatError(f"line {line_number}: expected 7 fields, got {len(fields)}", path=str(path))
            audio_path, image_path, corpus, raw_label, label, split, augmented = fields
            if augmented not in ("true", "false"):
                raise ManifestFormatError(f"line {line_number}: is_augmented must be true/false", path=str(path))
            try:
                records.append(SampleRecord(
                    audio_path=audio_path,
                    image_path=image_path or None,
                    corpus=Corpus(corpus),
                    raw_label=raw_label,
                    label=EmotionLabel.parse(label),
                    split=Split(split),
                    is_augmented=augmented == "true",
                ))
            except (ValueError, ValidationError) as e:
                raise ManifestFormatError(f"line {line_number}: {e}", path=str(path))
        try:
            return DatasetManifest(records=records)
        except ValidationError as e:
            raise ManifestFormatError(str(e), path=str(path))
