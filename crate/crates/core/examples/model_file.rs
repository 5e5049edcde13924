//! Write a model in the text format, read it back and solve it.

use wildkac::modelfile::ModelSpec;

const TEXT: &str = "\
# three-state rumour: an informed agent tells an uninformed one
states ignorant spreader stifler
arity 2
lambda 1
meet ignorant spreader -> spreader spreader 1
meet spreader ignorant -> spreader spreader 1
meet spreader spreader -> stifler stifler 1
unary forget 0.1
move forget stifler ignorant 1
init 0.95 0.05 0
";

fn main() -> wildkac::Result<()> {
    let spec = ModelSpec::parse(TEXT)?;
    print!("{}", spec.to_text());
    println!();
    // binary series need about e^t terms; long horizons belong to the integrator
    for t in [0.5, 1.0, 2.0, 4.0] {
        let law = spec.series(&spec.init, t, 1e-8)?.law;
        let w: Vec<String> = spec.space.labels().iter().zip(law.weights()).map(|(l, x)| format!("{l}={x:.4}")).collect();
        println!("t={t:<4} {}", w.join("  "));
    }
    Ok(())
}
