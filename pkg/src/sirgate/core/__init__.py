# Noyau numérique: coefficients, schémas, politique et services
