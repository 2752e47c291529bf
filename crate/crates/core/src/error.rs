use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("node pool exhausted at capacity {0}")]
    PoolExhausted(usize),
    #[error("glass is full ({0} elements)")]
    GlassFull(usize),
    #[error("key {0:#x} does not fit in the configured key width")]
    KeyOutOfRange(u64),
    #[error("next-best query too far from the best price")]
    PriceTooFar,
    #[error("amount at price {price} would become negative ({amount} + {delta})")]
    NegativeAmount { price: u64, amount: u64, delta: i64 },
}

pub type Result<T> = std::result::Result<T, Error>;
