# Golden-vector checker for the hash encoding and the three protocol variants.
