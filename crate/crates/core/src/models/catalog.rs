use super::base::{flat, fubini_study, product};
use super::bundle::line_bundle_sum;
use super::chart::Model;
use crate::Result;

/// `F_a = P(O(a) ⊕ O)` over `P¹`.
pub fn hirzebruch(a: i32) -> Result<Model> {
    let p1 = fubini_study(1)?;
    let e = line_bundle_sum(&p1, &[a, 0])?;
    Ok(Model::projectivized(p1, e).with_name(format!("F{a}")))
}

/// `P(O(a_0) ⊕ … ⊕ O(a_r))` over `Pⁿ`.
pub fn projective_sum(n: usize, degrees: &[i32]) -> Result<Model> {
    let base = fubini_study(n)?;
    let e = line_bundle_sum(&base, degrees)?;
    let tag = degrees.iter().map(i32::to_string).collect::<Vec<_>>().join("_");
    Ok(Model::projectivized(base, e).with_name(format!("p{n}sum{tag}")))
}

/// Identifiers accepted by [`catalog_model`].
pub const CATALOG: &[&str] = &[
    "p1", "p2", "p3", "p1xp1", "p1xp2", "flat2", "trivial1", "f0", "f1", "f2", "f3", "sum11", "sum21", "sum100",
    "p2sum10",
];

pub fn catalog_model(id: &str) -> Result<Option<Model>> {
    let m = match id {
        "p1" | "p2" | "p3" => {
            let n = id[1..].parse().expect("digit");
            Model::base_only(fubini_study(n)?)
        }
        "p1xp1" => Model::base_only(product(&fubini_study(1)?, &fubini_study(1)?)?),
        "p1xp2" => Model::base_only(product(&fubini_study(1)?, &fubini_study(2)?)?),
        "flat2" => Model::base_only(flat(2)?),
        "trivial1" => projective_sum(1, &[0])?,
        "f0" | "f1" | "f2" | "f3" => hirzebruch(id[1..].parse().expect("digit"))?,
        "sum11" => projective_sum(1, &[1, 1])?,
        "sum21" => projective_sum(1, &[2, 1])?,
        "sum100" => projective_sum(1, &[1, 0, 0])?,
        "p2sum10" => projective_sum(2, &[1, 0])?,
        _ => return Ok(None),
    };
    Ok(Some(m.with_name(id)))
}

/// Every catalog model, in [`CATALOG`] order.
pub fn catalog() -> Vec<Model> {
    CATALOG
        .iter()
        .map(|id| catalog_model(id).expect("catalog builds").expect("known id"))
        .collect()
}

/// Catalog models that are projectivized bundles of rank at least two.
pub fn bundle_catalog() -> Vec<Model> {
    catalog().into_iter().filter(|m| m.r() >= 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_id_builds() {
        let all = catalog();
        assert_eq!(all.len(), CATALOG.len());
        assert!(all.iter().all(Model::is_catalog));
        assert!(catalog_model("nope").unwrap().is_none());
        let rank2 = bundle_catalog();
        assert!(rank2.len() >= 6);
        assert!(rank2.iter().any(|m| m.n() == 2));
    }
}
