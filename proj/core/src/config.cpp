#include "xpandir/config.hpp"

#include <filesystem>

#include "xpandir/error.hpp"
#include "xpandir/toml_lite.hpp"

namespace xpandir {

namespace fs = std::filesystem;

namespace {

std::string resolve(const fs::path& base, const std::string& path) {
    if (path.empty()) return path;
    fs::path p(path);
    if (p.is_absolute()) return p.lexically_normal().string();
    return (base / p).lexically_normal().string();
}

Format parse_format(const std::string& token) {
    if (token == "jsonl") return Format::Jsonl;
    if (token == "tsv") return Format::Tsv;
    throw ConfigError("unknown format \"" + token + "\" (want jsonl|tsv)");
}

QrelScheme parse_scheme(const std::string& token) {
    if (token == "graded") return QrelScheme::Graded;
    if (token == "single-positive") return QrelScheme::SinglePositive;
    throw ConfigError("unknown qrels scheme \"" + token +
                      "\" (want graded|single-positive)");
}

class PoolLoader {
  public:
    explicit PoolLoader(fs::path base) : base_(std::move(base)) {}

    std::shared_ptr<const FewshotPool> get(const std::string& raw_path) {
        std::string path = resolve(base_, raw_path);
        auto it = pools_.find(path);
        if (it != pools_.end()) return it->second;
        auto pool = std::make_shared<const FewshotPool>(FewshotPool::load(path));
        pools_.emplace(path, pool);
        return pool;
    }

  private:
    fs::path base_;
    std::map<std::string, std::shared_ptr<const FewshotPool>> pools_;
};

ExpansionPlan plan_defaults(const ExperimentConfig& cfg) {
    ExpansionPlan plan;
    plan.rng_seed = cfg.rng_seed;
    plan.backend_id = cfg.backend.id;
    return plan;
}

}  // namespace

const QrelsEntry* ExperimentConfig::find_qrels(const LangCode& query_lang,
                                               const LangCode& doc_lang) const {
    for (const QrelsEntry& e : qrels)
        if (e.query_lang == query_lang && e.doc_lang == doc_lang) return &e;
    return nullptr;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    toml::Value root = toml::parse_file(path);
    fs::path base = fs::path(path).parent_path();

    // Extra languages first, so codes used below parse.
    if (const toml::Value* langs = root.find("languages"))
        for (const auto& [code, name] : langs->table)
            register_lang(code, name.as_string("languages." + code));

    ExperimentConfig cfg;
    if (const toml::Value* v = root.find("output_dir"))
        cfg.output_dir = resolve(base, v->as_string("output_dir"));
    if (const toml::Value* v = root.find("k_retrieve")) {
        std::int64_t k = v->as_int("k_retrieve");
        if (k < 1) throw ConfigError("k_retrieve must be at least 1");
        cfg.k_retrieve = static_cast<std::size_t>(k);
    }
    if (const toml::Value* v = root.find("rng_seed"))
        cfg.rng_seed = static_cast<std::uint64_t>(v->as_int("rng_seed"));
    if (const toml::Value* v = root.find("relevance_threshold")) {
        std::int64_t t = v->as_int("relevance_threshold");
        if (t < 1 || t > 6) throw ConfigError("relevance_threshold must be in [1,6]");
        cfg.relevance_threshold = static_cast<int>(t);
    }
    if (const toml::Value* v = root.find("run_tag")) cfg.run_tag = v->as_string("run_tag");

    if (const toml::Value* v = root.find("bm25")) {
        if (const toml::Value* k1 = v->find("k1")) cfg.bm25.k1 = k1->as_float("bm25.k1");
        if (const toml::Value* b = v->find("b")) cfg.bm25.b = b->as_float("bm25.b");
        if (cfg.bm25.k1 < 0.0) throw ConfigError("bm25.k1 must be nonnegative");
        if (cfg.bm25.b < 0.0 || cfg.bm25.b > 1.0)
            throw ConfigError("bm25.b must be in [0,1]");
    }
    if (const toml::Value* v = root.find("analyzer"))
        if (const toml::Value* s = v->find("stem_english"))
            cfg.stem_english = s->as_bool("analyzer.stem_english");

    if (const toml::Value* v = root.find("metrics")) {
        for (const toml::Value& m : v->as_array("metrics"))
            cfg.metric_specs.push_back(
                MetricSpec::parse(m.as_string("metrics entry"), cfg.relevance_threshold));
    }

    if (const toml::Value* v = root.find("backend")) {
        if (const toml::Value* k = v->find("kind")) cfg.backend.kind = k->as_string("backend.kind");
        if (cfg.backend.kind != "mock" && cfg.backend.kind != "http")
            throw ConfigError("backend.kind must be mock or http");
        if (const toml::Value* s = v->find("script"))
            cfg.backend.script_path = resolve(base, s->as_string("backend.script"));
        if (const toml::Value* u = v->find("base_url"))
            cfg.backend.base_url = u->as_string("backend.base_url");
        if (const toml::Value* m = v->find("model"))
            cfg.backend.model = m->as_string("backend.model");
        if (const toml::Value* i = v->find("id")) cfg.backend.id = i->as_string("backend.id");
        if (const toml::Value* n = v->find("max_in_flight"))
            cfg.backend.max_in_flight = static_cast<int>(n->as_int("backend.max_in_flight"));
        if (const toml::Value* n = v->find("max_attempts"))
            cfg.backend.max_attempts = static_cast<int>(n->as_int("backend.max_attempts"));
        if (const toml::Value* n = v->find("base_delay_ms"))
            cfg.backend.base_delay_ms = static_cast<int>(n->as_int("backend.base_delay_ms"));
        if (const toml::Value* n = v->find("max_delay_ms"))
            cfg.backend.max_delay_ms = static_cast<int>(n->as_int("backend.max_delay_ms"));
        if (const toml::Value* n = v->find("timeout_s"))
            cfg.backend.timeout_s = static_cast<int>(n->as_int("backend.timeout_s"));
    }
    if (cfg.backend.id.empty())
        cfg.backend.id = cfg.backend.kind == "mock" ? "mock" : cfg.backend.model;

    if (const toml::Value* v = root.find("lang_classes"))
        if (const toml::Value* e = v->find("european_latin")) {
            cfg.european_latin.clear();
            for (const toml::Value& c : e->as_array("lang_classes.european_latin"))
                cfg.european_latin.insert(
                    LangCode::parse(c.as_string("lang_classes entry")).str());
        }

    if (const toml::Value* v = root.find("query_sets"))
        for (const toml::Value& q : v->as_array("query_sets")) {
            QuerySetEntry e;
            e.lang = LangCode::parse(q.at("lang").as_string("query_sets.lang"));
            e.path = resolve(base, q.at("path").as_string("query_sets.path"));
            if (const toml::Value* f = q.find("format"))
                e.format = parse_format(f->as_string("query_sets.format"));
            cfg.query_sets.push_back(std::move(e));
        }
    if (const toml::Value* v = root.find("collections"))
        for (const toml::Value& c : v->as_array("collections")) {
            CollectionEntry e;
            e.lang = LangCode::parse(c.at("lang").as_string("collections.lang"));
            e.path = resolve(base, c.at("path").as_string("collections.path"));
            if (const toml::Value* f = c.find("format"))
                e.format = parse_format(f->as_string("collections.format"));
            if (const toml::Value* s = c.find("stopwords"))
                e.stopwords_path = resolve(base, s->as_string("collections.stopwords"));
            cfg.collections.push_back(std::move(e));
        }
    if (const toml::Value* v = root.find("qrels"))
        for (const toml::Value& q : v->as_array("qrels")) {
            QrelsEntry e;
            e.query_lang = LangCode::parse(q.at("query_lang").as_string("qrels.query_lang"));
            e.doc_lang = LangCode::parse(q.at("doc_lang").as_string("qrels.doc_lang"));
            if (e.query_lang == e.doc_lang)
                throw ConfigError("qrels pair " + e.query_lang.str() +
                                  "-" + e.doc_lang.str() + " is same-language");
            e.path = resolve(base, q.at("path").as_string("qrels.path"));
            if (const toml::Value* s = q.find("scheme"))
                e.scheme = parse_scheme(s->as_string("qrels.scheme"));
            if (cfg.find_qrels(e.query_lang, e.doc_lang))
                throw ConfigError("duplicate qrels entry for " + e.query_lang.str() +
                                  "-" + e.doc_lang.str());
            cfg.qrels.push_back(std::move(e));
        }

    PoolLoader pools(base);
    auto fill_plan_fields = [&](ExpansionPlan& plan, const toml::Value& t,
                                const char* where) {
        if (const toml::Value* r = t.find("repetitions")) {
            plan.query_repetitions = static_cast<int>(r->as_int(std::string(where) +
                                                                ".repetitions"));
        }
        if (const toml::Value* s = t.find("seed"))
            plan.rng_seed = static_cast<std::uint64_t>(s->as_int(std::string(where) + ".seed"));
        if (const toml::Value* c = t.find("clean"))
            plan.clean = parse_clean_mode(c->as_string(std::string(where) + ".clean"));
        if (const toml::Value* f = t.find("fewshot_count"))
            plan.fewshot_count = static_cast<int>(f->as_int(std::string(where) +
                                                            ".fewshot_count"));
        if (const toml::Value* p = t.find("fewshot_pool"))
            plan.fewshot_pool = pools.get(p->as_string(std::string(where) + ".fewshot_pool"));
    };

    if (const toml::Value* v = root.find("matrix")) {
        std::vector<std::string> strategies = v->string_array("strategies");
        std::vector<std::string> orders = v->string_array("orders");
        std::vector<std::string> forms = v->string_array("forms");
        ExpansionPlan base_plan = plan_defaults(cfg);
        fill_plan_fields(base_plan, *v, "matrix");
        std::shared_ptr<const FewshotPool> pool = base_plan.fewshot_pool;
        for (const std::string& s : strategies)
            for (const std::string& o : orders)
                for (const std::string& f : forms) {
                    ExpansionPlan plan = base_plan;
                    plan.strategy = parse_strategy(s);
                    plan.order = parse_order(o);
                    plan.retrieval_form = parse_retrieval_form(f);
                    plan.fewshot_pool =
                        plan.strategy == Strategy::FewShot ? pool : nullptr;
                    plan.validate();
                    cfg.plans.push_back(std::move(plan));
                }
    }
    if (const toml::Value* v = root.find("plans"))
        for (const toml::Value& p : v->as_array("plans")) {
            ExpansionPlan plan = plan_defaults(cfg);
            plan.strategy = parse_strategy(p.at("strategy").as_string("plans.strategy"));
            plan.order = parse_order(p.at("order").as_string("plans.order"));
            plan.retrieval_form =
                parse_retrieval_form(p.at("retrieval_form").as_string("plans.retrieval_form"));
            fill_plan_fields(plan, p, "plans");
            if (plan.strategy != Strategy::FewShot) plan.fewshot_pool = nullptr;
            plan.validate();
            cfg.plans.push_back(std::move(plan));
        }

    // The same cell twice would collide in the cache and the output tree.
    std::set<std::string> fingerprints;
    for (const ExpansionPlan& plan : cfg.plans)
        if (!fingerprints.insert(plan.fingerprint()).second)
            throw ConfigError("duplicate plan cell " + plan.fingerprint());

    return cfg;
}

}  // namespace xpandir
