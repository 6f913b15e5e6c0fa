#include "xpandir/expand.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "xpandir/analyzer.hpp"
#include "xpandir/error.hpp"

namespace xpandir {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kExpandSystem =
    "You are a text expansion model. Respond only with the requested passage. "
    "Stop naturally at the end of the passage and avoid repetition.";
// The dash in "query–passage" is U+2013.
constexpr const char* kFewshotSystem =
    "Given example query\xE2\x80\x93passage pairs, produce one short, relevant "
    "passage about the final query. Respond only with the passage; stop "
    "naturally at the end of the passage and avoid repetition.";

constexpr std::size_t kFewshotPassageTokenLimit = 512;

}  // namespace

Strategy parse_strategy(std::string_view token) {
    if (token == "zero-shot") return Strategy::ZeroShot;
    if (token == "cot") return Strategy::CoT;
    if (token == "rar") return Strategy::RaR;
    if (token == "few-shot") return Strategy::FewShot;
    throw ConfigError("unknown strategy \"" + std::string(token) +
                      "\" (want zero-shot|cot|rar|few-shot)");
}

Order parse_order(std::string_view token) {
    if (token == "t+e") return Order::TranslateThenExpand;
    if (token == "e+t") return Order::ExpandThenTranslate;
    throw ConfigError("unknown order \"" + std::string(token) + "\" (want t+e|e+t)");
}

RetrievalForm parse_retrieval_form(std::string_view token) {
    if (token == "doc-only") return RetrievalForm::DocOnly;
    if (token == "query-plus-doc") return RetrievalForm::QueryPlusDoc;
    throw ConfigError("unknown retrieval form \"" + std::string(token) +
                      "\" (want doc-only|query-plus-doc)");
}

CleanMode parse_clean_mode(std::string_view token) {
    if (token == "off") return CleanMode::Off;
    if (token == "strip-meta") return CleanMode::StripMeta;
    throw ConfigError("unknown clean mode \"" + std::string(token) +
                      "\" (want off|strip-meta)");
}

std::string_view strategy_token(Strategy s) {
    switch (s) {
        case Strategy::ZeroShot: return "zero-shot";
        case Strategy::CoT: return "cot";
        case Strategy::RaR: return "rar";
        case Strategy::FewShot: return "few-shot";
    }
    return {};
}

std::string_view order_token(Order o) {
    return o == Order::TranslateThenExpand ? "t+e" : "e+t";
}

std::string_view retrieval_form_token(RetrievalForm f) {
    return f == RetrievalForm::DocOnly ? "doc-only" : "query-plus-doc";
}

std::string_view clean_mode_token(CleanMode m) {
    return m == CleanMode::Off ? "off" : "strip-meta";
}

FewshotPool FewshotPool::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    FewshotPool pool;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ordered_json rec;
        try {
            rec = ordered_json::parse(line);
        } catch (const ordered_json::parse_error& e) {
            throw MalformedRecord(path, line_no, e.what());
        }
        if (!rec.contains("query") || !rec.contains("passage"))
            throw MalformedRecord(path, line_no, "record needs \"query\" and \"passage\"");
        FewshotExample ex;
        ex.query = rec.at("query").get<std::string>();
        ex.passage = rec.at("passage").get<std::string>();
        if (ex.query.empty() || ex.passage.empty())
            throw MalformedRecord(path, line_no, "empty query or passage");
        pool.pairs.push_back(std::move(ex));
    }
    if (pool.pairs.empty()) throw EmptyCollection(path + " holds no example pairs");
    return pool;
}

void ExpansionPlan::validate() const {
    if (strategy == Strategy::FewShot) {
        if (!fewshot_pool) throw MissingExamples("few-shot plan has no example pool");
        if (fewshot_count < 1) throw ConfigError("fewshot_count must be at least 1");
    } else if (fewshot_pool) {
        throw ConfigError("example pool given for a non-few-shot plan");
    }
    if (query_repetitions < 1)
        throw ConfigError("query_repetitions must be at least 1");
}

std::string ExpansionPlan::fingerprint() const {
    std::string fp;
    fp += strategy_token(strategy);
    fp += '.';
    fp += order_token(order);
    fp += '.';
    fp += retrieval_form_token(retrieval_form);
    fp += ".r" + std::to_string(query_repetitions);
    fp += ".s" + std::to_string(rng_seed);
    if (strategy == Strategy::FewShot) fp += ".f" + std::to_string(fewshot_count);
    if (clean == CleanMode::StripMeta) fp += ".strip-meta";
    return fp;
}

ExpansionPlan ExpansionPlan::parse_fingerprint(const std::string& fp) {
    if (fp == kBaselineCell) return ExpansionPlan{};  // translation-only records
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t dot = fp.find('.', start);
        if (dot == std::string::npos) {
            parts.push_back(fp.substr(start));
            break;
        }
        parts.push_back(fp.substr(start, dot - start));
        start = dot + 1;
    }
    if (parts.size() < 5) throw ConfigError("bad plan fingerprint \"" + fp + "\"");

    ExpansionPlan plan;
    plan.strategy = parse_strategy(parts[0]);
    plan.order = parse_order(parts[1]);
    plan.retrieval_form = parse_retrieval_form(parts[2]);
    try {
        if (parts[3].size() < 2 || parts[3][0] != 'r') throw std::invalid_argument(fp);
        plan.query_repetitions = std::stoi(parts[3].substr(1));
        if (parts[4].size() < 2 || parts[4][0] != 's') throw std::invalid_argument(fp);
        plan.rng_seed = std::stoull(parts[4].substr(1));
        for (std::size_t i = 5; i < parts.size(); ++i) {
            if (parts[i] == "strip-meta") plan.clean = CleanMode::StripMeta;
            else if (parts[i].size() >= 2 && parts[i][0] == 'f')
                plan.fewshot_count = std::stoi(parts[i].substr(1));
            else throw std::invalid_argument(fp);
        }
    } catch (const std::exception&) {
        throw ConfigError("bad plan fingerprint \"" + fp + "\"");
    }
    return plan;
}

ChatRequest build_prompt(Strategy strategy, const std::string& query_text,
                         const std::optional<std::vector<FewshotExample>>& fewshot_examples) {
    if (strategy == Strategy::FewShot) {
        if (!fewshot_examples || fewshot_examples->empty())
            throw MissingExamples("few-shot prompt needs example pairs");
    } else if (fewshot_examples) {
        throw InvalidRequest("examples supplied for a strategy that takes none");
    }

    ChatRequest req;
    switch (strategy) {
        case Strategy::ZeroShot:
            req.system_message = kExpandSystem;
            req.user_message =
                "Please write a passage to answer the question.\nQuestion: " + query_text;
            break;
        case Strategy::CoT:
            req.system_message = kExpandSystem;
            req.user_message =
                "Answer the following query, give the rationale before answering: " +
                query_text;
            break;
        case Strategy::RaR:
            req.system_message = kExpandSystem;
            req.user_message = "Rephrase and expand the question, and respond. " + query_text;
            break;
        case Strategy::FewShot: {
            req.system_message = kFewshotSystem;
            std::string user = "Please write a passage that answers the given query:";
            for (const FewshotExample& ex : *fewshot_examples) {
                std::string passage = ex.passage.substr(
                    0, truncation_offset(ex.passage, LangCode{}, kFewshotPassageTokenLimit));
                user += "\n\nQuery: " + ex.query + "\nPassage: " + passage;
            }
            user += "\n\nQuery: " + query_text + "\nPassage:";
            req.user_message = std::move(user);
            break;
        }
    }
    return req;
}

std::vector<FewshotExample> sample_fewshot(const FewshotPool& pool, std::size_t count,
                                           std::uint64_t rng_seed,
                                           const std::string& exclude_query) {
    std::size_t usable = 0;
    for (const FewshotExample& ex : pool.pairs)
        if (ex.query != exclude_query) ++usable;
    if (usable < count) throw PoolTooSmall(usable, count);

    // Fisher-Yates on explicit unbiased mt19937_64 draws: the same seed gives
    // the same order on every platform.
    std::vector<std::size_t> order(pool.pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(rng_seed);
    auto bounded = [&rng](std::uint64_t n) {
        std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        std::uint64_t limit = max - max % n;
        std::uint64_t x;
        do {
            x = rng();
        } while (x >= limit);
        return x % n;
    };
    for (std::size_t i = order.size() - 1; i > 0; --i)
        std::swap(order[i], order[bounded(i + 1)]);

    std::vector<FewshotExample> sample;
    sample.reserve(count);
    for (std::size_t idx : order) {
        if (sample.size() == count) break;
        const FewshotExample& ex = pool.pairs[idx];
        if (ex.query == exclude_query) continue;
        sample.push_back(ex);
    }
    return sample;
}

std::string clean_generation(const std::string& text, CleanMode mode) {
    if (mode == CleanMode::Off) return text;
    static constexpr const char* kMetaPrefixes[] = {
        "To answer this query,", "To answer this question,", "Here is a passage",
        "Here's a passage",      "Sure, here is",            "Sure, here's",
    };
    for (const char* prefix : kMetaPrefixes) {
        std::string_view p(prefix);
        if (text.size() <= p.size() || text.compare(0, p.size(), p) != 0) continue;
        std::size_t cut = text.find(". ", p.size());
        if (cut == std::string::npos) return text;
        std::string rest = text.substr(cut + 2);
        return rest.empty() ? text : rest;
    }
    return text;
}

namespace {

struct StepResult {
    std::string text;
    TraceStep step;
};

StepResult call(Backend& backend, const char* step_name, const ChatRequest& req) {
    GenerationResult res = backend.generate(req);
    return {res.text, {step_name, res.backend_id, res.latency_ms}};
}

StepResult call_translate(Backend& backend, const char* step_name, const std::string& text,
                          const LangCode& src, const LangCode& tgt) {
    return call(backend, step_name, translation_request(text, src, tgt));
}

}  // namespace

ExpandedQuery expand_query(Backend& backend, const ExpansionPlan& plan, const Query& query,
                           const LangCode& target_lang) {
    plan.validate();
    if (query.lang == target_lang)
        throw InvalidRequest("expansion requires distinct query and target languages, got " +
                             target_lang.str() + " twice");

    ExpandedQuery out;
    out.query_id = query.id;
    out.source_lang = query.lang;
    out.target_lang = target_lang;
    out.original_text = query.text;
    out.plan = plan;

    auto expand_once = [&](const std::string& prompt_query) {
        std::optional<std::vector<FewshotExample>> examples;
        if (plan.strategy == Strategy::FewShot)
            examples = sample_fewshot(*plan.fewshot_pool,
                                      static_cast<std::size_t>(plan.fewshot_count),
                                      plan.rng_seed, prompt_query);
        StepResult r = call(backend, "expand", build_prompt(plan.strategy, prompt_query, examples));
        out.trace.push_back(r.step);
        return clean_generation(r.text, plan.clean);
    };

    if (plan.order == Order::TranslateThenExpand) {
        StepResult tr =
            call_translate(backend, "translate", query.text, query.lang, target_lang);
        out.trace.push_back(tr.step);
        out.translated_text = tr.text;
        out.pseudo_document = expand_once(tr.text);
    } else {
        std::string source_pseudo = expand_once(query.text);
        StepResult tr = call_translate(backend, "translate", source_pseudo, query.lang,
                                       target_lang);
        out.trace.push_back(tr.step);
        out.pseudo_document = tr.text;
        if (plan.retrieval_form == RetrievalForm::QueryPlusDoc) {
            // The assembled query must be in the corpus language too.
            StepResult qr = call_translate(backend, "translate_query", query.text,
                                           query.lang, target_lang);
            out.trace.push_back(qr.step);
            out.translated_text = qr.text;
        }
    }

    if (plan.retrieval_form == RetrievalForm::DocOnly) {
        out.final_text = out.pseudo_document;
    } else {
        std::string assembled;
        for (int i = 0; i < plan.query_repetitions; ++i) {
            if (i > 0) assembled += '\n';
            assembled += *out.translated_text;
        }
        out.final_text = assembled + "\n" + out.pseudo_document;
    }
    if (out.final_text.empty()) throw ResponseEmpty("expansion produced no text");
    return out;
}

bool ExpansionCache::Key::operator<(const Key& o) const {
    if (fingerprint != o.fingerprint) return fingerprint < o.fingerprint;
    if (backend_id != o.backend_id) return backend_id < o.backend_id;
    return query_id < o.query_id;
}

ExpansionCache::ExpansionCache(std::string path) : path_(std::move(path)) {
    if (!std::filesystem::exists(path_)) return;
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw IoError("cannot open " + path_);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ordered_json rec;
        try {
            rec = ordered_json::parse(line);
        } catch (const ordered_json::parse_error& e) {
            throw MalformedRecord(path_, line_no, e.what());
        }
        try {
            ExpandedQuery q;
            q.query_id = rec.at("query_id").get<std::string>();
            std::string fp = rec.at("plan").get<std::string>();
            q.plan = ExpansionPlan::parse_fingerprint(fp);
            std::string backend_id = rec.at("backend_id").get<std::string>();
            q.source_lang = LangCode::parse(rec.at("source_lang").get<std::string>());
            q.target_lang = LangCode::parse(rec.at("target_lang").get<std::string>());
            q.original_text = rec.at("original_text").get<std::string>();
            if (rec.contains("translated_text") && !rec.at("translated_text").is_null())
                q.translated_text = rec.at("translated_text").get<std::string>();
            q.pseudo_document = rec.at("pseudo_document").get<std::string>();
            q.final_text = rec.at("final_text").get<std::string>();
            for (const auto& t : rec.at("trace")) {
                TraceStep step;
                step.step = t.at("step").get<std::string>();
                step.backend_id = t.at("backend_id").get<std::string>();
                step.latency_ms = t.at("latency_ms").get<std::int64_t>();
                q.trace.push_back(std::move(step));
            }
            records_.emplace(Key{fp, backend_id, q.query_id}, std::move(q));
        } catch (const ordered_json::exception& e) {
            throw MalformedRecord(path_, line_no, e.what());
        }
    }
}

const ExpandedQuery* ExpansionCache::find(const std::string& query_id,
                                          const std::string& fingerprint,
                                          const std::string& backend_id) const {
    auto it = records_.find(Key{fingerprint, backend_id, query_id});
    return it == records_.end() ? nullptr : &it->second;
}

void ExpansionCache::put(const ExpandedQuery& record, const std::string& backend_id) {
    put(record, record.plan.fingerprint(), backend_id);
}

void ExpansionCache::put(const ExpandedQuery& record, const std::string& fingerprint,
                         const std::string& backend_id) {
    records_[Key{fingerprint, backend_id, record.query_id}] = record;
}

void ExpansionCache::save() const {
    if (path_.empty()) throw IoError("cache has no path");
    save_as(path_);
}

void ExpansionCache::save_as(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& [key, q] : records_) {
        ordered_json rec;
        rec["query_id"] = q.query_id;
        rec["plan"] = key.fingerprint;
        rec["backend_id"] = key.backend_id;
        rec["source_lang"] = q.source_lang.str();
        rec["target_lang"] = q.target_lang.str();
        rec["original_text"] = q.original_text;
        if (q.translated_text) rec["translated_text"] = *q.translated_text;
        else rec["translated_text"] = nullptr;
        rec["pseudo_document"] = q.pseudo_document;
        rec["final_text"] = q.final_text;
        auto& trace = rec["trace"] = ordered_json::array();
        for (const TraceStep& t : q.trace)
            trace.push_back({{"step", t.step},
                             {"backend_id", t.backend_id},
                             {"latency_ms", t.latency_ms}});
        out << rec.dump() << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace xpandir
