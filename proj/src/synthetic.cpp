#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "dvrisk/corpus.hpp"
#include "dvrisk/error.hpp"
#include "dvrisk/markers.hpp"
#include "dvrisk/random.hpp"

namespace dvrisk::corpus {

namespace {

// Every marker sentence is "<subject> <phrase>." The subject contributes two
// neutral tokens and every phrase ends with at least two neutral tokens after
// any co-occurrence word, so no window reaches into a neighbouring sentence.
const std::vector<std::string> kSubjects = {"O autor", "O companheiro", "O ex-companheiro", "O investigado"};

const std::map<std::string, std::vector<std::string>, std::less<>> kPhrases = {
    {"Verbal Offense",
     {"xingou a vítima de vagabunda", "passou a ofendê-la com palavras de baixo calão",
      "insultou a vítima na frente dos filhos", "humilhou a vítima diante dos vizinhos"}},
    {"Physical Violence",
     {"agrediu fisicamente a vítima", "espancou a companheira dentro de casa", "cometeu agressões contra a vítima"}},
    {"Death Threat",
     {"ameaçou matar a vítima", "ameaçou de morte a companheira", "fez ameaças de morte contra a vítima"}},
    {"Discussion",
     {"discutiu com a vítima por motivo fútil", "iniciou uma discussão com a vítima",
      "teve um desentendimento com a vítima"}},
    {"Threat",
     {"ameaçou a vítima caso ela saísse de casa", "passou a intimidar a vítima com gritos",
      "ameaçou a vítima por telefone"}},
    {"Jealousy", {"demonstrou ciúmes excessivos da vítima", "agiu movido por ciúme da vítima"}},
    {"Physical Fight", {"entrou em luta corporal com a vítima", "se engalfinhou com a vítima no quintal"}},
    {"Punches",
     {"desferiu socos no rosto da vítima", "socou a vítima várias vezes", "esmurrou a vítima na cabeça"}},
    {"Physical Threat",
     {"ameaçou com uma faca de cozinha", "ameaçou com arma de fogo", "ameaçou com uma tesoura na mão"}},
    {"Object Damage",
     {"quebrou o celular da vítima", "danificou os móveis da residência", "destruiu objetos pessoais da vítima"}},
    {"Break Deny",
     {"mostrou-se inconformado com o fim do relacionamento", "ficou inconformado com a separação do casal"}},
    {"Hair Pull", {"puxou a vítima pelos cabelos", "deu puxões nos cabelos da vítima"}},
    {"Kick", {"chutou a vítima quando ela estava no chão", "deu pontapés na vítima"}},
    {"Stalk", {"passou a perseguir a vítima no trabalho", "perseguiu a vítima até a casa da mãe dela"}},
    {"Biting", {"mordeu o braço da vítima", "deu uma mordida no rosto da vítima"}},
    {"Strangling", {"tentou estrangular a vítima", "apertou o pescoço da vítima até esganá-la"}},
    {"Slap", {"deu tapas no rosto da vítima", "estapeou a vítima", "deu uma bofetada na vítima"}},
    {"Push", {"empurrou a vítima contra a parede", "empurrou a vítima escada abaixo"}},
    {"Sexual Harassment", {"assediou a vítima no local de trabalho", "apalpou a vítima sem consentimento"}},
    {"Residence Invasion", {"invadiu a residência da vítima", "arrombou a porta da casa da vítima"}},
    {"Possessive Control", {"controlava o celular da vítima", "proibia a vítima de sair de casa"}},
    {"Relationship Persistence", {"insistia em reatar o relacionamento", "insistiu em voltar com a vítima"}},
    {"Rape", {"estuprou a vítima", "cometeu estupro contra a vítima"}},
};

// Stated threat with no threatening keyword; enters the data as a manual
// annotation only.
constexpr const char* kImplicitDeathThreat = "O autor disse que se ela o deixasse acabaria com a vida dela.";
constexpr double kImplicitRate = 0.1;

const std::vector<std::string> kFiller = {
    "Comparece nesta delegacia a vítima para registrar ocorrência.",
    "Segundo a vítima os fatos ocorreram na residência do casal.",
    "A vítima relata que convive com o autor há alguns anos.",
    "A vítima solicita medidas protetivas de urgência.",
    "O autor estava embriagado no momento dos fatos.",
    "Os filhos do casal presenciaram o ocorrido.",
    "A vítima deseja representar criminalmente contra o autor.",
    "A vítima foi orientada quanto aos procedimentos legais.",
    "Os fatos ocorreram durante a noite na casa da vítima.",
    "A vítima possui dois filhos com o autor.",
};

const std::vector<std::string> kOverview = {
    "Trata-se de ocorrência de violência doméstica registrada com base na Lei Maria da Penha.",
    "Registro de ocorrência de vias de fato no âmbito doméstico conforme relato da comunicante.",
    "Comunicação de descumprimento de medida protetiva de urgência.",
};

const std::vector<std::string> kFemicideNarratives = {
    "A vítima foi encontrada sem vida na residência. O fato foi registrado como feminicídio e o autor foi "
    "identificado como companheiro da vítima.",
    "Equipe policial acionada ao local constatou o óbito da vítima. O caso foi registrado como feminicídio.",
};

constexpr int kSevereRankFloor = 15;

enum class Severity { Mild, Severe, Neutral };

Severity classify(const markers::MarkerEntry& entry) {
  if (!entry.severity_rank) return Severity::Neutral;
  return *entry.severity_rank >= kSevereRankFloor ? Severity::Severe : Severity::Mild;
}

/// Label-conditional reweighting of the lexicon frequencies. At strength 0
/// both labels share the base distribution; at strength 1 higher-risk reports
/// draw only severe markers, lower-risk reports only mild ones, and unranked
/// markers vanish.
double label_factor(Severity severity, RiskLabel label, double strength) {
  const bool higher = label == RiskLabel::HigherRisk;
  switch (severity) {
    case Severity::Severe: return higher ? 1.0 + 3.0 * strength : 1.0 - strength;
    case Severity::Mild: return higher ? 1.0 - strength : 1.0 + 3.0 * strength;
    case Severity::Neutral: return 1.0 - strength;
  }
  return 1.0;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& options) {
  return options[static_cast<std::size_t>(rng.below(options.size()))];
}

std::string fallback_phrase(const markers::MarkerEntry& entry) {
  std::string phrase = entry.stems.front() + "ou a vítima";
  if (!entry.cooccur.empty()) phrase = entry.stems.front() + "ou " + entry.cooccur.front() + "a a vítima";
  return phrase;
}

long log_uniform_days(Rng& rng, long lo, long hi) {
  const double value = std::exp(rng.uniform(std::log(static_cast<double>(lo)), std::log(static_cast<double>(hi + 1))));
  return std::clamp(static_cast<long>(std::floor(value)), lo, hi);
}

std::string make_id(char prefix, int number, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%0*d", prefix, width, number);
  return buf;
}

void validate(const GeneratorConfig& config) {
  if (config.higher_count <= 0 || config.lower_count <= 0 || config.femicide_count <= 0) {
    throw Error(ErrorKind::InvalidSpec, "higher_count, lower_count and femicide_count must be positive");
  }
  if (!(config.signal_strength >= 0.0 && config.signal_strength <= 1.0)) {
    throw Error(ErrorKind::InvalidSpec, "signal_strength must be in [0, 1]");
  }
  if (config.sequence_cases < 0 || config.sequence_cases > config.femicide_count) {
    throw Error(ErrorKind::InvalidSpec, "sequence_cases must be in [0, femicide_count]");
  }
  const int reports = config.higher_count + config.lower_count;
  const int needed = 2 * config.sequence_cases + (config.femicide_count - config.sequence_cases);
  if (reports < needed) {
    throw Error(ErrorKind::InvalidSpec, "need at least " + std::to_string(needed) +
                                            " reports: two per sequence case and one per remaining case");
  }
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus_detailed(const GeneratorConfig& config,
                                                   const markers::MarkerLexicon& lexicon, std::uint64_t seed) {
  validate(config);
  Rng rng(seed);

  std::vector<const markers::MarkerEntry*> drawable;
  for (const auto& entry : lexicon.entries()) {
    if (entry.canonical_name != markers::kFemicide) drawable.push_back(&entry);
  }
  if (drawable.empty()) throw Error(ErrorKind::InvalidSpec, "lexicon has no drawable markers");
  std::vector<double> weights_by_label[2];
  for (const RiskLabel label : {RiskLabel::HigherRisk, RiskLabel::LowerRisk}) {
    auto& weights = weights_by_label[static_cast<int>(label)];
    for (const auto* entry : drawable) {
      const double base = entry->paper_frequency.value_or(1);
      weights.push_back(base * label_factor(classify(*entry), label, config.signal_strength));
    }
  }

  const int cases = config.femicide_count;
  const int marker_cases = config.sequence_cases;
  const int total_reports = config.higher_count + config.lower_count;

  // Case 0..marker_cases-1 carry marker narratives; the rest are single
  // broad-overview reports.
  std::vector<int> reports_per_case(static_cast<std::size_t>(cases), 1);
  for (int c = 0; c < marker_cases; ++c) reports_per_case[static_cast<std::size_t>(c)] = 2;
  const int allocated = 2 * marker_cases + (cases - marker_cases);
  for (int r = allocated; r < total_reports; ++r) {
    const int pool = marker_cases > 0 ? marker_cases : cases;
    ++reports_per_case[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(pool)))];
  }

  std::vector<RiskLabel> labels;
  labels.insert(labels.end(), static_cast<std::size_t>(config.higher_count), RiskLabel::HigherRisk);
  labels.insert(labels.end(), static_cast<std::size_t>(config.lower_count), RiskLabel::LowerRisk);
  rng.shuffle(std::span<RiskLabel>(labels));

  const Date window_start = parse_date("2017-01-01");
  const long window_days = days_between(window_start, parse_date("2021-12-31"));

  SyntheticCorpus out;
  std::size_t label_cursor = 0;
  int report_number = 0;
  for (int c = 0; c < cases; ++c) {
    const std::string case_id = make_id('C', c + 1, 3);
    const Date femicide_date = window_start + std::chrono::days{rng.between(0, window_days)};
    const bool with_markers = c < marker_cases;

    struct Draft {
      Report report;
      std::vector<std::string> planted;
    };
    std::vector<Draft> drafts;
    for (int k = 0; k < reports_per_case[static_cast<std::size_t>(c)]; ++k) {
      const RiskLabel label = labels[label_cursor++];
      const long days = label == RiskLabel::HigherRisk ? log_uniform_days(rng, 1, 364) : log_uniform_days(rng, 365, 3000);
      Draft draft;
      draft.report.case_id = case_id;
      draft.report.femicide_date = femicide_date;
      draft.report.registered_at = femicide_date - std::chrono::days{days};

      std::string narrative;
      if (with_markers) {
        narrative = pick(rng, kFiller);
        const auto& weights = weights_by_label[static_cast<int>(label)];
        const auto n_markers = 1 + rng.below(3);
        for (std::uint64_t m = 0; m < n_markers; ++m) {
          const auto& entry = *drawable[rng.weighted(weights)];
          narrative += ' ';
          if (entry.canonical_name == "Death Threat" && rng.uniform() < kImplicitRate) {
            draft.report.manual_annotations.push_back({entry.canonical_name, narrative.size() + 8});
            narrative += kImplicitDeathThreat;
          } else {
            auto it = kPhrases.find(entry.canonical_name);
            const std::string phrase = it != kPhrases.end() ? pick(rng, it->second) : fallback_phrase(entry);
            narrative += pick(rng, kSubjects) + " " + phrase + ".";
          }
          draft.planted.push_back(entry.canonical_name);
        }
        if (rng.uniform() < 0.3) narrative += " " + pick(rng, kFiller);
      } else {
        narrative = pick(rng, kOverview) + " " + pick(rng, kFiller);
      }
      draft.report.narrative = std::move(narrative);
      drafts.push_back(std::move(draft));
    }
    std::stable_sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
      return a.report.registered_at < b.report.registered_at;
    });

    Draft terminal;
    terminal.report.case_id = case_id;
    terminal.report.registered_at = femicide_date;
    terminal.report.femicide_date = femicide_date;
    terminal.report.is_femicide_report = true;
    terminal.report.narrative = pick(rng, kFemicideNarratives);
    drafts.push_back(std::move(terminal));

    for (auto& draft : drafts) {
      draft.report.report_id = make_id('R', ++report_number, 4);
      validate_report(draft.report);
      out.reports.push_back(std::move(draft.report));
      out.planted.push_back(std::move(draft.planted));
    }
  }
  return out;
}

std::vector<Report> generate_synthetic_corpus(const GeneratorConfig& config, const markers::MarkerLexicon& lexicon,
                                              std::uint64_t seed) {
  return generate_synthetic_corpus_detailed(config, lexicon, seed).reports;
}

}  // namespace dvrisk::corpus
