from fractions import Fraction
from typing import Dict, Hashable, List


class DatasetHelper:
    @staticmethod
    def round_half_up(value: Fraction) -> int:
        """Nearest integer, halves rounded up; exact for rationals"""
        return int((value + Fraction(1, 2)).__floor__())

    @staticmethod
    def allocate_split_counts(class_counts: Dict[Hashable, int], fraction: Fraction) -> Dict[Hashable, int]:
        """
        Per-class share of a split, matching the global count

        Each class gets round(fraction * n_c); the residual against round(fraction * N)
        is then handed out one record at a time: extra records go to the classes
        rounded down the most, removals come from the classes rounded up the most.
        Ties follow the key order of class_counts. No class moves more than one
        record away from its own rounded share.
        """
        total = sum(class_counts.values())
        target = DatasetHelper.round_half_up(fraction * total)

        allocated = {
            key: DatasetHelper.round_half_up(fraction * count)
            for key, count in class_counts.items()
        }
        residual = {key: fraction * count - allocated[key] for key, count in class_counts.items()}
        order: List[Hashable] = list(class_counts)

        # Adjust rounding mismatch
        diff = target - sum(allocated.values())
        if diff > 0:
            candidates = sorted(order, key=lambda k: (-residual[k], order.index(k)))
            candidates = [k for k in candidates if allocated[k] < class_counts[k]]
            for key in candidates[:diff]:
                allocated[key] += 1
        elif diff < 0:
            candidates = sorted(order, key=lambda k: (residual[k], order.index(k)))
            candidates = [k for k in candidates if allocated[k] > 0]
            for key in candidates[:-diff]:
                allocated[key] -= 1

        return allocated

    @staticmethod
    def percentage(count: int, total: int) -> float:
        """100 * count / total, 2 decimals half-up; 0 when total is 0"""
        if total == 0:
            return 0.0
        return DatasetHelper.round_half_up(Fraction(100 * count, total) * 100) / 100
