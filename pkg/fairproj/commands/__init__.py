"""
Sous-commandes de la ligne de commande fairproj
"""
