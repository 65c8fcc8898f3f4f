use serde_json::{json, Value};
use sutherland_core::kks::{admissibility_closed, Admissibility, KksParams, RawParams};
use sutherland_core::lie::{CaseTag, Scheme};

use crate::{CaseArg, RepArgs, UsageError};

impl From<CaseArg> for CaseTag {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::I => CaseTag::I,
            CaseArg::II => CaseTag::II,
            CaseArg::III => CaseTag::III,
        }
    }
}

/// Representation selected on the command line.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scheme: Scheme,
    pub raw: RawParams,
    pub admissibility: Admissibility,
}

impl Resolved {
    pub fn params(&self) -> Option<KksParams> {
        self.admissibility.params
    }

    pub fn to_json(&self) -> Value {
        json!({
            "free": self.admissibility.params,
            "raw": self.raw,
        })
    }
}

pub fn scheme_for(case: CaseArg, n: usize) -> Result<Scheme, UsageError> {
    Scheme::for_case(case.into(), n).map_err(|e| UsageError(e.to_string()))
}

fn forbid(flags: &[(&str, bool)], case: CaseArg) -> Result<(), UsageError> {
    for (name, present) in flags {
        if *present {
            return Err(UsageError(format!("--{name} does not apply to case {case:?}")));
        }
    }
    Ok(())
}

/// Free parameters unless `--a1` or a dependent `k` flag is given, in which
/// case the four `k`s and `a1` are taken as raw data.
pub fn resolve(a: &RepArgs) -> Result<Resolved, UsageError> {
    let scheme = scheme_for(a.case, a.n)?;
    let n = a.n;
    let g = a.gamma.unwrap_or(0);
    let gt = a.gamma_tilde.unwrap_or(0);
    let gh = a.gamma_hat.unwrap_or(0);
    let z = |x: Option<i64>| x.unwrap_or(0);
    let (free, dependent_given) = match a.case {
        CaseArg::I => {
            forbid(&[("gamma-tilde", a.gamma_tilde.is_some()), ("gamma-hat", a.gamma_hat.is_some()), ("k", a.k.is_some())], a.case)?;
            (
                KksParams::I { gamma: g, kl1: z(a.kl1), kl2: z(a.kl2), kr1: z(a.kr1) },
                a.kr2.is_some(),
            )
        }
        CaseArg::II => {
            forbid(&[("gamma-hat", a.gamma_hat.is_some()), ("k", a.k.is_some())], a.case)?;
            (
                KksParams::II { gamma: g, gamma_tilde: gt, kr1: z(a.kr1), kr2: z(a.kr2) },
                a.kl1.is_some() || a.kl2.is_some(),
            )
        }
        CaseArg::III => (
            KksParams::III { gamma: g, gamma_tilde: gt, gamma_hat: gh, k: z(a.k) },
            a.kl1.is_some() || a.kl2.is_some() || a.kr1.is_some() || a.kr2.is_some(),
        ),
    };
    let raw = if a.a1.is_some() || dependent_given {
        let implied = free.to_raw(n);
        RawParams {
            a1: a.a1.unwrap_or(implied.a1),
            kl1: a.kl1.or(if a.case == CaseArg::III { a.k } else { None }).unwrap_or(0),
            kl2: z(a.kl2),
            kr1: z(a.kr1),
            kr2: z(a.kr2),
        }
    } else {
        free.to_raw(n)
    };
    let admissibility = admissibility_closed(&scheme, raw).map_err(|e| UsageError(e.to_string()))?;
    Ok(Resolved {
        scheme,
        raw,
        admissibility,
    })
}
