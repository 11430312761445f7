mod support;

#[test]
fn normalization_is_confluent_idempotent_and_type_preserving() {
    support::check_normalization(1500, 7).unwrap();
}

#[test]
fn unifier_is_sound_on_random_pattern_problems() {
    support::check_unifier_soundness(1500, 11).unwrap();
}

#[test]
fn unifier_is_most_general_against_brute_force() {
    let solved = support::check_unifier_generality(400, 13).unwrap();
    assert!(solved > 50, "only {solved} problems had unifiers");
}

#[test]
fn propositional_counts_match_the_oracle() {
    let (checked, provable) = support::check_propositional(2000, 17).unwrap();
    assert!(checked >= 4000);
    assert!(provable > 100 && provable < checked - 100, "{provable} of {checked} provable");
}
