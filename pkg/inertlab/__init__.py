"""InertLab - Inertial automorphisms of abelian groups"""

__version__ = '1.0.0'
__author__ = 'InertLab'

from .cli import InertLab, run_command
