# Numerical Analysis Package