#pragma once

#include <array>
#include <string>
#include <string_view>

namespace becaus {

/// The six causal relations between two observed variables theta and psi.
/// Inconclusive is only ever produced by the classifier.
enum class Relation {
  Inconclusive = 0,
  Independence = 1,           // R1: theta, psi free and unrelated
  ThetaCausesPsi = 2,         // R2: theta -> psi
  PsiCausesTheta = 3,         // R3: psi -> theta
  ThetaPartiallyCausesPsi = 4,  // R4: theta, (v) -> psi
  PsiPartiallyCausesTheta = 5,  // R5: psi, (v) -> theta
  LatentCommonCause = 6,      // R6: (v) -> theta, psi
};

enum class Structure {
  Independence,        // I
  FullCausality,       // II
  PartialCausality,    // III
  LatentCommonCause,   // IV
};

inline constexpr std::array<Relation, 6> kAllRelations = {
    Relation::Independence,           Relation::ThetaCausesPsi,
    Relation::PsiCausesTheta,         Relation::ThetaPartiallyCausesPsi,
    Relation::PsiPartiallyCausesTheta, Relation::LatentCommonCause};

Structure structure_of(Relation r);

/// "R1".."R6" or "Inconclusive".
std::string_view relation_label(Relation r);
/// Human-readable arrow form, e.g. "theta,(v)->psi".
std::string_view relation_description(Relation r);
std::string_view structure_label(Structure s);

/// Parses "R1".."R6", "1".."6" or "Inconclusive". Throws InputError.
Relation parse_relation(std::string_view text);

/// The relation obtained by exchanging the roles of theta and psi.
Relation swapped(Relation r);

/// Whether the relation has theta as an (observed) system input.
bool theta_is_input(Relation r);
bool psi_is_input(Relation r);
/// Whether the relation involves an unobserved signal v.
bool has_latent(Relation r);

struct CausalScenario {
  Relation relation = Relation::Independence;

  Structure structure() const { return structure_of(relation); }
  bool operator==(const CausalScenario&) const = default;
};

}  // namespace becaus
