"""InertLab Configuration
Environment-based settings for budgets, seeds and report output.
"""

import os
from typing import Dict


class Config:
    """Library and CLI configuration settings."""

    # Sampling budgets
    BUDGET = int(os.getenv('INERTLAB_BUDGET', 6))
    SEED = int(os.getenv('INERTLAB_SEED', 0))
    FALSIFY_TRIALS = int(os.getenv('INERTLAB_FALSIFY_TRIALS', 200))
    COEFF_BOUND = int(os.getenv('INERTLAB_COEFF_BOUND', 4))  # coordinates bounded by p**COEFF_BOUND
    INVERSE_ORDER_CAP = int(os.getenv('INERTLAB_INVERSE_ORDER_CAP', 4096))

    # Output
    FORMAT = os.getenv('INERTLAB_FORMAT', 'human')

    # Logging
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'WARNING')
    LOG_FILE = os.getenv('LOG_FILE', '')

    # Status marks used in human-readable reports
    MARKS: Dict[str, str] = {
        'pass': 'PASS',
        'fail': 'FAIL',
        'info': '----',
        'skip': 'SKIP',
    }

    @classmethod
    def get_mark(cls, status: str) -> str:
        """Get a status mark for report tables."""
        return cls.MARKS.get(status, cls.MARKS['info'])
