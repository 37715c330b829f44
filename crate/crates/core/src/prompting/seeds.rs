use super::{CotExemplar, ExemplarStyle};

const COT: [&str; 5] = [
    include_str!("../../assets/exemplars/cot/01_bell.txt"),
    include_str!("../../assets/exemplars/cot/02_ghz.txt"),
    include_str!("../../assets/exemplars/cot/03_statevector.txt"),
    include_str!("../../assets/exemplars/cot/04_deutsch_jozsa.txt"),
    include_str!("../../assets/exemplars/cot/05_grover.txt"),
];

const SCOT: [&str; 5] = [
    include_str!("../../assets/exemplars/scot/01_bell.txt"),
    include_str!("../../assets/exemplars/scot/02_ghz.txt"),
    include_str!("../../assets/exemplars/scot/03_statevector.txt"),
    include_str!("../../assets/exemplars/scot/04_deutsch_jozsa.txt"),
    include_str!("../../assets/exemplars/scot/05_grover.txt"),
];

/// The five hand-written seed exemplars shipped for `style`.
pub fn seed_exemplars(style: ExemplarStyle) -> Vec<CotExemplar> {
    let texts = match style {
        ExemplarStyle::Cot => &COT,
        ExemplarStyle::Scot => &SCOT,
    };
    texts
        .iter()
        .map(|t| CotExemplar::parse(t).expect("shipped exemplar parses"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_of_each_and_they_are_fixpoints() {
        for style in [ExemplarStyle::Cot, ExemplarStyle::Scot] {
            let seeds = seed_exemplars(style);
            assert_eq!(seeds.len(), 5);
            for (s, text) in seeds.iter().zip(match style {
                ExemplarStyle::Cot => COT,
                ExemplarStyle::Scot => SCOT,
            }) {
                assert_eq!(s.style, style);
                assert_eq!(s.format(), text);
            }
        }
    }
}
