"""
Briques transverses : exceptions et journalisation
"""
