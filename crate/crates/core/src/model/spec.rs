use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{AttentionParams, LstmParams};
use crate::Stance;

/// The five architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Independent BiLSTMs over target and sentence, max-pooled and
    /// concatenated.
    Concat,
    /// `Concat` with adversarial domain heads on the pooled sentence vector.
    ConcatInvar,
    /// Conditional BiLSTM with additive attention.
    Bca,
    /// `Bca` with adversarial domain heads on the attended representation.
    BcaInvar,
    /// `BcaInvar` plus a parallel non-adversarial conditional encoder whose
    /// representation is concatenated before the stance head.
    BcaInvarSpec,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Concat,
        Variant::ConcatInvar,
        Variant::Bca,
        Variant::BcaInvar,
        Variant::BcaInvarSpec,
    ];

    pub fn is_adversarial(self) -> bool {
        matches!(
            self,
            Variant::ConcatInvar | Variant::BcaInvar | Variant::BcaInvarSpec
        )
    }

    pub fn has_attention(self) -> bool {
        matches!(
            self,
            Variant::Bca | Variant::BcaInvar | Variant::BcaInvarSpec
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Concat => "Concat",
            Variant::ConcatInvar => "Concat-Invar",
            Variant::Bca => "BCA",
            Variant::BcaInvar => "BCA-Invar",
            Variant::BcaInvarSpec => "BCA-Invar-Spec",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "concat" => Ok(Variant::Concat),
            "concatinvar" => Ok(Variant::ConcatInvar),
            "bca" => Ok(Variant::Bca),
            "bcainvar" => Ok(Variant::BcaInvar),
            "bcainvarspec" => Ok(Variant::BcaInvarSpec),
            _ => Err(Error::Config(format!(
                "unknown variant '{s}' (expected one of Concat, Concat-Invar, BCA, BCA-Invar, BCA-Invar-Spec)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Rows of the attention projection.
    pub attn_dim: usize,
    /// Rows of the stance MLP.
    pub mlp_dim: usize,
    pub num_classes: usize,
    pub num_domains: usize,
}

impl ModelSpec {
    /// Attention and MLP sizes default to `2·hidden` and `hidden`.
    pub fn new(variant: Variant, embed_dim: usize, hidden_dim: usize, num_domains: usize) -> Self {
        ModelSpec {
            variant,
            embed_dim,
            hidden_dim,
            attn_dim: 2 * hidden_dim,
            mlp_dim: hidden_dim,
            num_classes: Stance::COUNT,
            num_domains,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.attn_dim == 0 || self.mlp_dim == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if self.num_classes != Stance::COUNT {
            return Err(Error::Config(format!(
                "stance head must have {} classes, got {}",
                Stance::COUNT,
                self.num_classes
            )));
        }
        if self.variant.is_adversarial() && self.num_domains < 2 {
            return Err(Error::Config(format!(
                "{} needs at least two source domains, got {}",
                self.variant, self.num_domains
            )));
        }
        Ok(())
    }

    /// Length of the vector fed to the stance head.
    pub fn repr_dim(&self) -> usize {
        let h2 = 2 * self.hidden_dim;
        match self.variant {
            Variant::Bca | Variant::BcaInvar => h2,
            Variant::Concat | Variant::ConcatInvar | Variant::BcaInvarSpec => 2 * h2,
        }
    }

    /// Length of the vector read by each domain head.
    pub fn adversarial_dim(&self) -> usize {
        2 * self.hidden_dim
    }

    /// Closed-form count of trainable scalars.
    pub fn parameter_count(&self) -> usize {
        let (e, h) = (self.embed_dim, self.hidden_dim);
        let lstm = LstmParams::scalar_count(e, h);
        let attention = AttentionParams::scalar_count(2 * h, 2 * h, self.attn_dim);
        let encoders = match self.variant {
            Variant::Concat | Variant::ConcatInvar => 4 * lstm,
            Variant::Bca | Variant::BcaInvar => 4 * lstm + attention,
            Variant::BcaInvarSpec => 2 * (4 * lstm + attention),
        };
        let head = self.mlp_dim * self.repr_dim() + self.num_classes * self.mlp_dim;
        let domains = if self.variant.is_adversarial() {
            self.num_domains * (2 * self.adversarial_dim() + 2)
        } else {
            0
        };
        encoders + head + domains
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_variant_names() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("bca_invar".parse::<Variant>().unwrap(), Variant::BcaInvar);
        assert!("transformer".parse::<Variant>().is_err());
    }

    #[test]
    fn adversarial_needs_two_domains() {
        assert!(ModelSpec::new(Variant::BcaInvar, 4, 4, 1)
            .validate()
            .is_err());
        assert!(ModelSpec::new(Variant::Bca, 4, 4, 1).validate().is_ok());
        assert!(ModelSpec::new(Variant::Bca, 0, 4, 1).validate().is_err());
    }

    #[test]
    fn full_size_bca_count() {
        // LSTM: 4·200·300 + 800 = 240 800, four of them = 963 200
        // attention: 400·800 + 400 = 320 400
        // MLP 200·400 = 80 000, stance 3·200 = 600
        let spec = ModelSpec::new(Variant::Bca, 100, 200, 4);
        assert_eq!(spec.parameter_count(), 963_200 + 320_400 + 80_000 + 600);
        let invar = ModelSpec {
            variant: Variant::BcaInvar,
            ..spec
        };
        assert_eq!(
            invar.parameter_count() - spec.parameter_count(),
            4 * (2 * 400 + 2)
        );
    }
}
