use super::CubeComplex;
use crate::error::{Error, Result};

/// Restriction quotient forgetting the walls labelled in `g`; returns the quotient and the vertex map.
pub fn delete_hyperplanes(cx: &CubeComplex, g: &[usize]) -> Result<(CubeComplex, Vec<usize>)> {
    let mut drop = vec![false; cx.n_walls()];
    for &label in g {
        let pos = cx
            .labels()
            .iter()
            .position(|&l| l == label)
            .ok_or_else(|| Error::Argument(format!("unknown hyperplane {label}")))?;
        drop[pos] = true;
    }
    let keep: Vec<usize> = (0..cx.n_walls()).filter(|&w| !drop[w]).collect();
    let labels: Vec<usize> = keep.iter().map(|&w| cx.labels()[w]).collect();
    let images: Vec<_> = cx.vertices().iter().map(|v| v.select(&keep)).collect();
    let q = CubeComplex::from_vertices(labels, images.clone())?;
    let map = images
        .iter()
        .map(|b| q.find(b).expect("image vertex present"))
        .collect();
    Ok((q, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::Bits;

    fn path(k: usize) -> CubeComplex {
        let v = (0..=k)
            .map(|i| Bits::from_bools(&(0..k).map(|w| w < i).collect::<Vec<_>>()))
            .collect();
        CubeComplex::from_vertices((0..k).collect(), v).unwrap()
    }

    #[test]
    fn middle_of_three_path() {
        let cx = path(3);
        let (q, map) = delete_hyperplanes(&cx, &[1]).unwrap();
        assert_eq!(q.n_vertices(), 3);
        assert_eq!(q.l1(map[0], map[3]), 2);
    }

    #[test]
    fn empty_deletion_is_identity() {
        let cx = path(4);
        let (q, map) = delete_hyperplanes(&cx, &[]).unwrap();
        assert_eq!(q.n_vertices(), 5);
        assert_eq!(map, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn unknown_label_rejected() {
        assert!(delete_hyperplanes(&path(2), &[7]).is_err());
    }
}
