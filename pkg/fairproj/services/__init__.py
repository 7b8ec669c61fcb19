"""
Services métier : données, distributions, projection, apprenants faibles, boosting, métriques
"""
