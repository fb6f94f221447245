"""Protocol constants that come from outside this package.

Changing any of these changes classification results.
"""

# Solana vote program
VOTE_PROGRAM_ID = "Vote111111111111111111111111111111111111111"

# ERC20 4-byte selectors: transfer(address,uint256), transferFrom(address,address,uint256)
ERC20_TRANSFER_SELECTORS = frozenset({"0xa9059cbb", "0x23b872dd"})

# Solana getBlock errors meaning "no block for this slot"
SOLANA_SKIPPED_SLOT_CODES = frozenset({-32007, -32009})
