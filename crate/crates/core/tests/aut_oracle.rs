//! |Aut G| against a brute-force count of bijective endomorphisms.

use corank::qseries::{aut_order, PGroupType};

/// Elements of ⊕ Z/p^{λ_i} as mixed-radix indices.
struct Group {
    moduli: Vec<u64>,
    size: usize,
}

impl Group {
    fn new(p: u64, lambda: &[u32]) -> Self {
        let moduli: Vec<u64> = lambda.iter().map(|&l| p.pow(l)).collect();
        let size = moduli.iter().product::<u64>() as usize;
        Group { moduli, size }
    }

    fn coords(&self, mut x: usize) -> Vec<u64> {
        self.moduli
            .iter()
            .map(|&m| {
                let c = x as u64 % m;
                x /= m as usize;
                c
            })
            .collect()
    }

    fn index(&self, c: &[u64]) -> usize {
        let mut x = 0usize;
        for (ci, &m) in c.iter().zip(&self.moduli).rev() {
            x = x * m as usize + (ci % m) as usize;
        }
        x
    }

    fn order_divides(&self, x: usize, n: u64) -> bool {
        self.coords(x)
            .iter()
            .zip(&self.moduli)
            .all(|(&c, &m)| (c * n).is_multiple_of(m))
    }
}

fn brute_aut(p: u64, lambda: &[u32]) -> u64 {
    let g = Group::new(p, lambda);
    // admissible images of each generator: order dividing that generator's order
    let choices: Vec<Vec<usize>> = g
        .moduli
        .iter()
        .map(|&m| (0..g.size).filter(|&x| g.order_divides(x, m)).collect())
        .collect();
    let images: Vec<Vec<Vec<u64>>> = choices
        .iter()
        .map(|c| c.iter().map(|&x| g.coords(x)).collect())
        .collect();
    let mut count = 0u64;
    let mut pick = vec![0usize; g.moduli.len()];
    let mut seen = vec![0u32; g.size];
    let mut stamp = 0u32;
    loop {
        stamp += 1;
        let mut injective = true;
        for x in 0..g.size {
            let c = g.coords(x);
            let mut img = vec![0u64; g.moduli.len()];
            for (i, &ci) in c.iter().enumerate() {
                for (j, v) in images[i][pick[i]].iter().enumerate() {
                    img[j] += ci * v;
                }
            }
            let y = g.index(&img);
            if seen[y] == stamp {
                injective = false;
                break;
            }
            seen[y] = stamp;
        }
        if injective {
            count += 1;
        }
        // odometer over generator images
        let mut i = 0;
        loop {
            if i == pick.len() {
                return count;
            }
            pick[i] += 1;
            if pick[i] < choices[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

#[test]
fn aut_matches_bruteforce() {
    let mut checked = 0;
    for p in [2u64, 3] {
        for t in PGroupType::enumerate(p, 4, 4).unwrap() {
            // 3^4 with rank 4 means 81^4 image tuples; skip it
            if p == 3 && t.log_order() == 4 && t.rank() > 3 {
                continue;
            }
            if t.rank() == 0 {
                assert_eq!(aut_order(&t), 1.into());
                continue;
            }
            let brute = brute_aut(p, t.lambda());
            assert_eq!(aut_order(&t), brute.into(), "p={p} G={t}");
            checked += 1;
        }
    }
    assert!(checked >= 15);
}

#[test]
fn known_small_values() {
    // GL_2(F_2), GL_2(F_3), Aut(Z/4 ⊕ Z/2) dihedral of order 8, (Z/9)^×
    assert_eq!(brute_aut(2, &[1, 1]), 6);
    assert_eq!(brute_aut(3, &[1, 1]), 48);
    assert_eq!(brute_aut(2, &[2, 1]), 8);
    assert_eq!(brute_aut(3, &[2]), 6);
}
