# Radius, Set and Report Models Package