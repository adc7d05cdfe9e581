# Lecture de la configuration et écriture des résultats
