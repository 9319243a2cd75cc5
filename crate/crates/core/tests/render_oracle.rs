mod common;

use artattack::render::{render, render_circles, render_rectangles, render_triangles, render_unprojected};
use artattack::{Genome, Image, RandomStream, ShapeKind};
use common::brute_force_render;
use proptest::prelude::*;

fn random_image(h: usize, w: usize, rng: &mut RandomStream) -> Image {
    Image::from_fn(h, w, |_, _| [rng.unit(), rng.unit(), rng.unit()])
}

#[test]
fn random_genomes_match_brute_force_pixel_exactly() {
    let mut rng = RandomStream::new(2024);
    for kind in ShapeKind::ALL {
        for _ in 0..50 {
            let g = Genome::random(kind, 10, &mut rng);
            let x = random_image(16, 16, &mut rng);
            let fast = render(&g, &x, 1.0, 12.0).unwrap();
            assert_eq!(fast.as_slice(), brute_force_render(&g, &x, Some(1.0), 12.0).as_slice());
            let fast = render_unprojected(&g, &x, 12.0).unwrap();
            assert_eq!(fast.as_slice(), brute_force_render(&g, &x, None, 12.0).as_slice());
        }
    }
}

#[test]
fn per_kind_entry_points_match() {
    let mut rng = RandomStream::new(5);
    let x = random_image(16, 16, &mut rng);
    let c = Genome::random(ShapeKind::Circle, 10, &mut rng);
    let t = Genome::random(ShapeKind::Triangle, 10, &mut rng);
    let r = Genome::random(ShapeKind::Rectangle, 10, &mut rng);
    assert_eq!(render_circles(&c, &x, 0.05, 12.0).unwrap().as_slice(), brute_force_render(&c, &x, Some(0.05), 12.0));
    assert_eq!(render_triangles(&t, &x, 0.05).unwrap().as_slice(), brute_force_render(&t, &x, Some(0.05), 1.0));
    assert_eq!(render_rectangles(&r, &x, 0.05).unwrap().as_slice(), brute_force_render(&r, &x, Some(0.05), 1.0));
}

#[test]
fn rendering_is_pure() {
    let mut rng = RandomStream::new(8);
    let x = random_image(12, 9, &mut rng);
    let g = Genome::random(ShapeKind::Triangle, 30, &mut rng);
    let a = render(&g, &x, 0.05, 12.0).unwrap();
    let b = render(&g, &x, 0.05, 12.0).unwrap();
    assert_eq!(a.as_slice(), b.as_slice());
}

fn kind() -> impl Strategy<Value = ShapeKind> {
    prop_oneof![Just(ShapeKind::Circle), Just(ShapeKind::Triangle), Just(ShapeKind::Rectangle)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn output_stays_in_eps_ball(kind in kind(), n in 1usize..20, h in 1usize..20, w in 1usize..20,
                                eps in 0.001f64..1.0, seed in any::<u64>()) {
        let mut rng = RandomStream::new(seed);
        let g = Genome::random(kind, n, &mut rng);
        let x = random_image(h, w, &mut rng);
        let out = render(&g, &x, eps, 12.0).unwrap();
        prop_assert!(out.linf_distance(&x).unwrap() <= eps + 1e-9);
        prop_assert!(out.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn matches_brute_force_on_odd_sizes(kind in kind(), n in 1usize..8, h in 1usize..24, w in 1usize..24,
                                        beta in 1.0f64..20.0, seed in any::<u64>()) {
        let mut rng = RandomStream::new(seed);
        let g = Genome::random(kind, n, &mut rng);
        let x = random_image(h, w, &mut rng);
        let fast = render_unprojected(&g, &x, beta).unwrap();
        let slow = brute_force_render(&g, &x, None, beta);
        prop_assert_eq!(fast.as_slice(), slow.as_slice());
    }
}
