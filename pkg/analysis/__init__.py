# This file makes Python treat the directory as a package
