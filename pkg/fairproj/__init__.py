"""
Package fairproj - boosting équitable par projection KL et outils d'expérience
"""

__version__ = "1.0.0"
