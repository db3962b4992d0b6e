use crate::mdp::{Mdp, MdpBuilder};

/// Six-state instance with three behaviours at `s1` that share the optimal
/// CVaR at α = 0.1 only partially:
///
/// ```text
/// s0 --a(0)--> s1 (0.85) | s2 (0.15)
/// s2 --f(10)--> g
/// s1 --e(8)--> g
/// s1 --d(2)--> g (0.9) | s3 (0.1);  s3 --go(7)--> g
/// s1 --c(0)--> g (0.9) | s4 (0.1);  s4 --go(20)--> g
/// ```
pub fn build_desk_instance() -> Mdp {
    let mut b = MdpBuilder::new();
    let [s0, s1, s2, s3, s4, g] =
        ["s0", "s1", "s2", "s3", "s4", "g"].map(|n| b.add_state(n).expect("fresh names"));
    let edges: [(_, &str, f64, Vec<_>); 7] = [
        (s0, "a", 0.0, vec![(s1, 0.85), (s2, 0.15)]),
        (s1, "e", 8.0, vec![(g, 1.0)]),
        (s1, "d", 2.0, vec![(g, 0.9), (s3, 0.1)]),
        (s1, "c", 0.0, vec![(g, 0.9), (s4, 0.1)]),
        (s2, "f", 10.0, vec![(g, 1.0)]),
        (s3, "go", 7.0, vec![(g, 1.0)]),
        (s4, "go", 20.0, vec![(g, 1.0)]),
    ];
    for (s, label, cost, succ) in edges {
        b.add_action(s, label, cost, succ).expect("known states");
    }
    b.mark_goal(g).expect("known state");
    b.set_initial(s0).expect("known state");
    b.build().expect("initial set")
}
