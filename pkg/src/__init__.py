# Thin-Set Uncertainty Lab Package