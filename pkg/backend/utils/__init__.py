# Exact rank and plotting helpers
