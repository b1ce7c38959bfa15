#include <array>
#include <fstream>
#include <string_view>

#include "jointkpe/baselines.h"
#include "jointkpe/error.h"
#include "jointkpe/text.h"

namespace jointkpe {
namespace {

// Contraction stems ("don", "t", "ll", ...) are listed because the lexer
// splits on apostrophes.
constexpr std::array<std::string_view, 179> kEnglish = {
    "a",       "about",   "above",  "after",   "again",   "against", "ain",     "all",
    "am",      "an",      "and",    "any",     "are",     "aren",    "as",      "at",
    "be",      "because", "been",   "before",  "being",   "below",   "between", "both",
    "but",     "by",      "can",    "couldn",  "d",       "did",     "didn",    "do",
    "does",    "doesn",   "doing",  "don",     "down",    "during",  "each",    "few",
    "for",     "from",    "further", "had",    "hadn",    "has",     "hasn",    "have",
    "haven",   "having",  "he",     "her",     "here",    "hers",    "herself", "him",
    "himself", "his",     "how",    "i",       "if",      "in",      "into",    "is",
    "isn",     "it",      "its",    "itself",  "just",    "ll",      "m",       "ma",
    "me",      "mightn",  "more",   "most",    "mustn",   "my",      "myself",  "needn",
    "no",      "nor",     "not",    "now",     "o",       "of",      "off",     "on",
    "once",    "only",    "or",     "other",   "our",     "ours",    "ourselves", "out",
    "over",    "own",     "re",     "s",       "same",    "shan",    "she",     "should",
    "shouldn", "so",      "some",   "such",    "t",       "than",    "that",    "the",
    "their",   "theirs",  "them",   "themselves", "then", "there",   "these",   "they",
    "this",    "those",   "through", "to",     "too",     "under",   "until",   "up",
    "ve",      "very",    "was",    "wasn",    "we",      "were",    "weren",   "what",
    "when",    "where",   "which",  "while",   "who",     "whom",    "why",     "will",
    "with",    "won",     "wouldn", "y",       "you",     "your",    "yours",   "yourself",
    "yourselves", "also", "could",  "would",   "yes",     "yeah",    "ok",      "okay",
    "oh",      "lol",     "u",      "ur",      "im",      "dont",    "cant",    "get",
    "got",     "like",    "one",    "well",    "go",      "know",    "really",  "think",
    "want",    "see",     "let",
};

constexpr std::array<std::string_view, 128> kPortuguese = {
    "a",      "à",      "ao",     "aos",    "aquela", "aquelas", "aquele", "aqueles",
    "aquilo", "as",     "às",     "até",    "com",    "como",    "da",     "das",
    "de",     "dela",   "delas",  "dele",   "deles",  "depois",  "do",     "dos",
    "e",      "é",      "ela",    "elas",   "ele",    "eles",    "em",     "entre",
    "era",    "eram",   "essa",   "essas",  "esse",   "esses",   "esta",   "está",
    "estamos", "estão", "estas",  "estava", "estavam", "este",   "estes",  "eu",
    "foi",    "fomos",  "for",    "foram",  "fosse",  "fossem",  "fui",    "há",
    "isso",   "isto",   "já",     "lhe",    "lhes",   "mais",    "mas",    "me",
    "mesmo",  "meu",    "meus",   "minha",  "minhas", "muito",   "na",     "não",
    "nas",    "nem",    "no",     "nos",    "nós",    "nossa",   "nossas", "nosso",
    "nossos", "num",    "numa",   "o",      "os",     "ou",      "para",   "pela",
    "pelas",  "pelo",   "pelos",  "por",    "qual",   "quando",  "que",    "quem",
    "são",    "se",     "seja",   "sem",    "ser",    "seu",     "seus",   "só",
    "sua",    "suas",   "também", "te",     "tem",    "têm",     "tenho",  "ter",
    "teu",    "teus",   "tu",     "tua",    "tuas",   "um",      "uma",    "umas",
    "uns",    "você",   "vocês",  "vos",    "vc",     "pra",     "pq",     "tá",
};

}  // namespace

StopwordSet StopwordSet::english() {
  StopwordSet s;
  s.source = "builtin:en";
  for (auto w : kEnglish) s.words.emplace(w);
  return s;
}

StopwordSet StopwordSet::portuguese() {
  StopwordSet s;
  s.source = "builtin:pt";
  for (auto w : kPortuguese) s.words.emplace(w);
  return s;
}

StopwordSet StopwordSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Throw(ErrorKind::kLoad, "cannot open stopword list " + path.string());
  StopwordSet s;
  s.source = path.string();
  std::string line;
  while (std::getline(in, line)) {
    const std::string w = normalize_phrase(line);
    if (w.empty() || w.front() == '#') continue;
    s.words.insert(w);
  }
  if (s.words.empty()) Throw(ErrorKind::kValidation, path.string() + ": no stopwords");
  return s;
}

}  // namespace jointkpe
