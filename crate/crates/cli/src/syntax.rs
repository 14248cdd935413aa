//! Compact group syntax for the command line.
//!
//! `Z^2: ±[1,0] ±[0,1]`, `(3)xZ: ±[0;1] [1;0] [2;0]`, `(2,2): [1,0;] [0,1;]`.
//! With torsion every element is `[t₁,..;v₁,..]`; without, just `[v₁,..]`.
//! A leading `±` (or `+-`) adds the inverse, a trailing `*k` sets the
//! multiplicity.

use anyhow::{anyhow, bail, Context, Result};
use edgecolor::group::GeneratorSpec;
use edgecolor::io::InstanceSpec;

fn ints<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().with_context(|| format!("bad integer {x:?}")))
        .collect()
}

fn header(h: &str) -> Result<(Vec<i64>, usize)> {
    let h: String = h.chars().filter(|c| !c.is_whitespace()).collect();
    let (torsion, rest) = match h.strip_prefix('(') {
        Some(r) => {
            let close = r.find(')').ok_or_else(|| anyhow!("unclosed torsion in {h:?}"))?;
            let rest = r[close + 1..].trim_start_matches(['x', 'X', '*']);
            (ints(&r[..close])?, rest.to_string())
        }
        None => (Vec::new(), h.clone()),
    };
    let rank = if rest.is_empty() {
        0
    } else {
        let r = rest
            .strip_prefix('Z')
            .ok_or_else(|| anyhow!("expected Z or Z^d in {h:?}"))?;
        match r.strip_prefix('^') {
            Some(d) => d.parse().with_context(|| format!("bad rank {d:?}"))?,
            None if r.is_empty() => 1,
            None => bail!("unexpected {r:?} in {h:?}"),
        }
    };
    Ok((torsion, rank))
}

fn element(tok: &str, has_torsion: bool) -> Result<Vec<GeneratorSpec>> {
    let (both, tok) = if let Some(t) = tok.strip_prefix('±') {
        (true, t)
    } else if let Some(t) = tok.strip_prefix("+-") {
        (true, t)
    } else {
        (false, tok)
    };
    let (body, mult) = match tok.rsplit_once('*') {
        Some((b, m)) => (b, m.parse::<u32>().with_context(|| format!("bad multiplicity {m:?}"))?),
        None => (tok, 1),
    };
    let inner = body
        .strip_prefix('[')
        .and_then(|b| b.strip_suffix(']'))
        .ok_or_else(|| anyhow!("element {tok:?} must be bracketed"))?;
    let (t, v) = if has_torsion {
        let (t, v) = inner
            .split_once(';')
            .ok_or_else(|| anyhow!("element {tok:?} needs torsion;free"))?;
        (ints(t)?, ints(v)?)
    } else {
        (Vec::new(), ints(inner)?)
    };
    let mut out = vec![GeneratorSpec::new(&t, &v, mult)];
    if both {
        let nt: Vec<i64> = t.iter().map(|x| -x).collect();
        let nv: Vec<i64> = v.iter().map(|x| -x).collect();
        out.push(GeneratorSpec::new(&nt, &nv, mult));
    }
    Ok(out)
}

/// Parses a group and attaches `periods`.
pub fn parse_group(s: &str, periods: Vec<u64>) -> Result<InstanceSpec> {
    let (head, gens) = s.split_once(':').ok_or_else(|| anyhow!("expected `group: generators`"))?;
    let (torsion, rank) = header(head)?;
    let mut generators = Vec::new();
    for tok in gens.split_whitespace() {
        generators.extend(element(tok, !torsion.is_empty())?);
    }
    if generators.is_empty() {
        bail!("no generators");
    }
    Ok(InstanceSpec {
        torsion,
        rank,
        periods,
        generators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_plane() {
        let spec = parse_group("Z^2: ±[1,0] ±[0,1]", vec![4, 4]).unwrap();
        assert_eq!((spec.rank, spec.generators.len()), (2, 4));
        assert_eq!(spec.generators[1].free, vec![-1, 0]);
        spec.build().unwrap();
    }

    #[test]
    fn torsion_and_multiplicity() {
        let spec = parse_group("(3)xZ: +-[0;1]*2 [1;0] [2;0]", vec![10]).unwrap();
        assert_eq!(spec.torsion, vec![3]);
        assert_eq!(spec.generators[0].mult, 2);
        assert_eq!(spec.build().unwrap().degree(), 6);
    }

    #[test]
    fn finite_group() {
        let spec = parse_group("(2,2): [1,0;] [0,1;] [1,1;]", vec![]).unwrap();
        assert_eq!(spec.rank, 0);
        assert_eq!(spec.build().unwrap().degree(), 3);
    }

    #[test]
    fn errors() {
        assert!(parse_group("Z^2 [1,0]", vec![]).is_err());
        assert!(parse_group("(3)xZ: [1]", vec![8]).is_err());
        assert!(parse_group("Q: [1]", vec![8]).is_err());
    }
}
