#include "becaus/scenario.hpp"

#include "becaus/error.hpp"

namespace becaus {

Structure structure_of(Relation r) {
  switch (r) {
    case Relation::Independence:
      return Structure::Independence;
    case Relation::ThetaCausesPsi:
    case Relation::PsiCausesTheta:
      return Structure::FullCausality;
    case Relation::ThetaPartiallyCausesPsi:
    case Relation::PsiPartiallyCausesTheta:
      return Structure::PartialCausality;
    case Relation::LatentCommonCause:
      return Structure::LatentCommonCause;
    case Relation::Inconclusive:
      break;
  }
  throw InputError("Inconclusive has no causal structure");
}

std::string_view relation_label(Relation r) {
  switch (r) {
    case Relation::Independence: return "R1";
    case Relation::ThetaCausesPsi: return "R2";
    case Relation::PsiCausesTheta: return "R3";
    case Relation::ThetaPartiallyCausesPsi: return "R4";
    case Relation::PsiPartiallyCausesTheta: return "R5";
    case Relation::LatentCommonCause: return "R6";
    case Relation::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

std::string_view relation_description(Relation r) {
  switch (r) {
    case Relation::Independence: return "no relation";
    case Relation::ThetaCausesPsi: return "theta->psi";
    case Relation::PsiCausesTheta: return "psi->theta";
    case Relation::ThetaPartiallyCausesPsi: return "theta,(v)->psi";
    case Relation::PsiPartiallyCausesTheta: return "psi,(v)->theta";
    case Relation::LatentCommonCause: return "(v)->theta,psi";
    case Relation::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string_view structure_label(Structure s) {
  switch (s) {
    case Structure::Independence: return "I";
    case Structure::FullCausality: return "II";
    case Structure::PartialCausality: return "III";
    case Structure::LatentCommonCause: return "IV";
  }
  return "?";
}

Relation parse_relation(std::string_view text) {
  if (text == "Inconclusive" || text == "inconclusive") return Relation::Inconclusive;
  if (!text.empty() && (text.front() == 'R' || text.front() == 'r')) {
    text.remove_prefix(1);
  }
  if (text.size() == 1 && text[0] >= '1' && text[0] <= '6') {
    return static_cast<Relation>(text[0] - '0');
  }
  throw InputError("unknown relation label '" + std::string(text) + "'");
}

Relation swapped(Relation r) {
  switch (r) {
    case Relation::ThetaCausesPsi: return Relation::PsiCausesTheta;
    case Relation::PsiCausesTheta: return Relation::ThetaCausesPsi;
    case Relation::ThetaPartiallyCausesPsi: return Relation::PsiPartiallyCausesTheta;
    case Relation::PsiPartiallyCausesTheta: return Relation::ThetaPartiallyCausesPsi;
    default: return r;
  }
}

bool theta_is_input(Relation r) {
  return r == Relation::Independence || r == Relation::ThetaCausesPsi ||
         r == Relation::ThetaPartiallyCausesPsi;
}

bool psi_is_input(Relation r) {
  return r == Relation::Independence || r == Relation::PsiCausesTheta ||
         r == Relation::PsiPartiallyCausesTheta;
}

bool has_latent(Relation r) {
  return r == Relation::Independence || r == Relation::ThetaPartiallyCausesPsi ||
         r == Relation::PsiPartiallyCausesTheta || r == Relation::LatentCommonCause;
}

}  // namespace becaus
