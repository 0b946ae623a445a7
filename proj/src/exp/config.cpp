#include "ro2o/exp/config.hpp"

#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ro2o::exp {
namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what)
{
    throw ConfigError(path + ": " + what);
}

/// Rejects keys of `user` that the schema object does not know.
void check_keys(const Json& user, const Json& schema, const std::string& path)
{
    if (!user.is_object()) {
        fail(path, "expected an object");
    }
    for (const auto& [key, value] : user.items()) {
        const std::string here = path.empty() ? key : path + "." + key;
        if (!schema.contains(key)) {
            fail(here, "unknown key");
        }
        const Json& s = schema.at(key);
        if (s.is_object() && !s.empty()) {
            check_keys(value, s, here);
        }
    }
}

void merge_into(Json& dst, const Json& src)
{
    for (const auto& [key, value] : src.items()) {
        if (value.is_object() && dst.contains(key) && dst[key].is_object() && !dst[key].empty()) {
            merge_into(dst[key], value);
        } else {
            dst[key] = value;
        }
    }
}

template <typename T>
T get(const Json& j, const char* key, const std::string& path)
{
    const std::string here = path.empty() ? key : path + "." + key;
    if (!j.contains(key)) {
        fail(here, "missing");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        fail(here, std::string("wrong type (") + e.what() + ")");
    }
}

template <typename F>
auto parse_enum(const Json& j, const char* key, const std::string& path, F from_string)
{
    const auto text = get<std::string>(j, key, path);
    try {
        return from_string(text);
    } catch (const std::invalid_argument& e) {
        fail(path.empty() ? key : path + "." + key, e.what());
    }
}

Json quality_to_json(const env::DatasetQuality& q)
{
    Json j;
    j["tier"] = std::string(env::to_string(q.tier));
    j["noise"] = q.noise_scale;
    j["episodes"] = q.episodes;
    return j;
}

env::DatasetQuality quality_from_json(const Json& j, const std::string& path)
{
    env::DatasetQuality q;
    q.tier = parse_enum(j, "tier", path, env::tier_from_string);
    q.noise_scale = get<double>(j, "noise", path);
    q.episodes = get<int>(j, "episodes", path);
    try {
        q.validate();
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
    return q;
}

}  // namespace

Json agent_to_json(const agent::Ro2oConfig& c)
{
    Json j;
    j["n_critics"] = c.n_critics;
    j["hidden"] = c.hidden;
    j["activation"] = std::string(ad::to_string(c.activation));
    j["gamma"] = c.gamma;
    j["batch_size"] = c.batch_size;
    j["lr_actor"] = c.lr_actor;
    j["lr_critic"] = c.lr_critic;
    j["lr_entropy"] = c.lr_entropy;
    j["polyak"] = c.polyak;
    j["eta1"] = c.eta_q_smooth;
    j["eta2"] = c.eta_ood;
    j["eta3"] = c.eta_policy_smooth;
    j["eps_q"] = c.eps_q;
    j["eps_p"] = c.eps_p;
    j["eps_ood"] = c.eps_ood;
    j["n"] = c.n_perturb;
    j["tau"] = c.tau_smooth;
    j["symmetric_smooth"] = c.symmetric_smooth;
    j["alpha"] = {{"start", c.alpha.start}, {"end", c.alpha.end}, {"rate", c.alpha.rate}};
    Json beta;
    beta["mode"] = std::string(agent::to_string(c.entropy_mode));
    beta["init"] = c.beta_init;
    beta["target_entropy"] = c.target_entropy ? Json(*c.target_entropy) : Json(nullptr);
    j["beta"] = beta;
    j["policy_objective"] = std::string(agent::to_string(c.policy_objective));
    j["beta_bc"] = {{"offline", c.bc_offline}, {"online", c.bc_online}};
    j["target_mode"] = {{"offline", std::string(critic::to_string(c.target_offline))},
                        {"online", std::string(critic::to_string(c.target_online))}};
    j["buffer_regime"] = std::string(data::to_string(c.online_regime));
    j["online_capacity"] = c.online_capacity;
    j["log_std"] = {{"min", c.log_std_min}, {"max", c.log_std_max}};
    return j;
}

agent::Ro2oConfig agent_from_json(const Json& user, const agent::Ro2oConfig& base)
{
    const std::string p = "agent";
    Json j = agent_to_json(base);
    check_keys(user, j, p);
    merge_into(j, user);

    agent::Ro2oConfig c;
    c.n_critics = get<int>(j, "n_critics", p);
    c.hidden = get<std::vector<ad::Index>>(j, "hidden", p);
    c.activation = parse_enum(j, "activation", p, ad::activation_from_string);
    c.gamma = get<double>(j, "gamma", p);
    c.batch_size = get<int>(j, "batch_size", p);
    c.lr_actor = get<double>(j, "lr_actor", p);
    c.lr_critic = get<double>(j, "lr_critic", p);
    c.lr_entropy = get<double>(j, "lr_entropy", p);
    c.polyak = get<double>(j, "polyak", p);
    c.eta_q_smooth = get<double>(j, "eta1", p);
    c.eta_ood = get<double>(j, "eta2", p);
    c.eta_policy_smooth = get<double>(j, "eta3", p);
    c.eps_q = get<double>(j, "eps_q", p);
    c.eps_p = get<double>(j, "eps_p", p);
    c.eps_ood = get<double>(j, "eps_ood", p);
    c.n_perturb = get<int>(j, "n", p);
    c.tau_smooth = get<double>(j, "tau", p);
    c.symmetric_smooth = get<bool>(j, "symmetric_smooth", p);
    const Json& a = j.at("alpha");
    c.alpha.start = get<double>(a, "start", p + ".alpha");
    c.alpha.end = get<double>(a, "end", p + ".alpha");
    c.alpha.rate = get<double>(a, "rate", p + ".alpha");
    const Json& b = j.at("beta");
    c.entropy_mode = parse_enum(b, "mode", p + ".beta", agent::entropy_mode_from_string);
    c.beta_init = get<double>(b, "init", p + ".beta");
    if (b.contains("target_entropy") && !b.at("target_entropy").is_null()) {
        c.target_entropy = get<double>(b, "target_entropy", p + ".beta");
    }
    c.policy_objective = parse_enum(j, "policy_objective", p, agent::policy_objective_from_string);
    c.bc_offline = get<double>(j.at("beta_bc"), "offline", p + ".beta_bc");
    c.bc_online = get<double>(j.at("beta_bc"), "online", p + ".beta_bc");
    c.target_offline = parse_enum(j.at("target_mode"), "offline", p + ".target_mode", critic::target_mode_from_string);
    c.target_online = parse_enum(j.at("target_mode"), "online", p + ".target_mode", critic::target_mode_from_string);
    c.online_regime = parse_enum(j, "buffer_regime", p, data::regime_from_string);
    c.online_capacity = get<std::size_t>(j, "online_capacity", p);
    c.log_std_min = get<double>(j.at("log_std"), "min", p + ".log_std");
    c.log_std_max = get<double>(j.at("log_std"), "max", p + ".log_std");
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (c.online_regime == data::BufferRegime::OfflineOnly) {
        fail(p + ".buffer_regime", "online phase needs union or discard-offline");
    }
    return c;
}

Json to_json(const ExperimentConfig& c)
{
    Json j;
    j["name"] = c.name;
    j["env"] = c.env;
    Json ds = quality_to_json(c.dataset.quality);
    ds["seed"] = c.dataset.seed;
    ds["reward_transform"] = c.dataset.reward_transform;
    ds["path"] = c.dataset.path;
    j["dataset"] = ds;
    Json inj = quality_to_json(c.inject.quality);
    inj["enabled"] = c.inject.enabled;
    inj["seed"] = c.inject.seed;
    j["inject"] = inj;
    j["agent"] = agent_to_json(c.agent);
    Json arms = Json::array();
    for (const auto& arm : c.arms) {
        arms.push_back({{"name", arm.name}, {"agent", arm.overrides}});
    }
    j["arms"] = arms;
    j["t1"] = c.t1;
    j["t2"] = c.t2;
    j["seeds"] = c.seeds;
    j["out_dir"] = c.out_dir;
    j["eval"] = {{"offline_interval", c.eval.offline_interval},
                 {"online_interval", c.eval.online_interval},
                 {"episodes", c.eval.episodes},
                 {"seed", c.eval.seed}};
    j["log_every"] = c.log_every;
    j["drop_k"] = c.drop_k;
    return j;
}

ExperimentConfig from_json(const Json& user)
{
    if (!user.is_object()) {
        throw ConfigError("config: expected a JSON object");
    }
    ExperimentConfig base;
    Json rest = user;
    if (rest.contains("preset")) {
        if (!rest.at("preset").is_string()) {
            fail("preset", "expected a string");
        }
        base = preset(rest.at("preset").get<std::string>());
        rest.erase("preset");
    }
    Json j = to_json(base);
    // The agent block is checked by agent_from_json; arms are replaced wholesale.
    Json schema = j;
    schema["agent"] = Json::object();
    schema["arms"] = Json::array();
    check_keys(rest, schema, "");
    if (rest.contains("agent")) {
        j["agent"] = agent_to_json(agent_from_json(rest.at("agent"), base.agent));
        rest.erase("agent");
    }
    merge_into(j, rest);

    ExperimentConfig c;
    c.name = get<std::string>(j, "name", "");
    c.env = get<std::string>(j, "env", "");
    const Json& ds = j.at("dataset");
    c.dataset.quality = quality_from_json(ds, "dataset");
    c.dataset.seed = get<std::uint64_t>(ds, "seed", "dataset");
    c.dataset.reward_transform = get<bool>(ds, "reward_transform", "dataset");
    c.dataset.path = get<std::string>(ds, "path", "dataset");
    const Json& inj = j.at("inject");
    c.inject.quality = quality_from_json(inj, "inject");
    c.inject.enabled = get<bool>(inj, "enabled", "inject");
    c.inject.seed = get<std::uint64_t>(inj, "seed", "inject");
    c.agent = agent_from_json(j.at("agent"));
    c.arms.clear();
    if (!j.at("arms").is_array()) {
        fail("arms", "expected an array");
    }
    for (const auto& a : j.at("arms")) {
        Arm arm;
        arm.name = get<std::string>(a, "name", "arms[]");
        if (a.contains("agent")) {
            arm.overrides = a.at("agent");
        }
        for (const auto& [key, value] : a.items()) {
            if (key != "name" && key != "agent") {
                fail("arms[" + arm.name + "]." + key, "unknown key");
            }
        }
        c.arms.push_back(std::move(arm));
    }
    c.t1 = get<std::int64_t>(j, "t1", "");
    c.t2 = get<std::int64_t>(j, "t2", "");
    c.seeds = get<std::vector<std::uint64_t>>(j, "seeds", "");
    c.out_dir = get<std::string>(j, "out_dir", "");
    const Json& ev = j.at("eval");
    c.eval.offline_interval = get<std::int64_t>(ev, "offline_interval", "eval");
    c.eval.online_interval = get<std::int64_t>(ev, "online_interval", "eval");
    c.eval.episodes = get<int>(ev, "episodes", "eval");
    c.eval.seed = get<std::uint64_t>(ev, "seed", "eval");
    c.log_every = get<std::int64_t>(j, "log_every", "");
    c.drop_k = get<int>(j, "drop_k", "");
    c.validate();
    return c;
}

void ExperimentConfig::validate() const
{
    if (env != "PointMass2D" && env != "SparseMaze2D") {
        fail("env", "unknown environment '" + env + "' (expected PointMass2D|SparseMaze2D)");
    }
    if (seeds.empty()) {
        fail("seeds", "must not be empty");
    }
    if (t1 < 0 || t2 < 0) {
        fail("t1/t2", "budgets must be >= 0");
    }
    if (eval.episodes < 1 || eval.offline_interval < 0 || eval.online_interval < 0) {
        fail("eval", "episodes must be >= 1 and intervals >= 0");
    }
    if (log_every < 1) {
        fail("log_every", "must be >= 1");
    }
    if (drop_k < 1) {
        fail("drop_k", "must be >= 1");
    }
    for (std::size_t i = 0; i < arms.size(); ++i) {
        if (arms[i].name.empty()) {
            fail("arms", "arm names must be non-empty");
        }
        for (std::size_t k = 0; k < i; ++k) {
            if (arms[k].name == arms[i].name) {
                fail("arms", "duplicate arm name '" + arms[i].name + "'");
            }
        }
        (void)arm_agent(arms[i]);
    }
    try {
        agent.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

agent::Ro2oConfig ExperimentConfig::arm_agent(const Arm& arm) const
{
    return agent_from_json(arm.overrides, agent);
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path.string() + ": cannot open");
    }
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return from_json(j);
}

std::string canonical_dump(const ExperimentConfig& cfg)
{
    // nlohmann::json (unordered variant) stores objects sorted by key.
    return nlohmann::json::parse(to_json(cfg).dump()).dump();
}

std::string config_hash(const ExperimentConfig& cfg)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_dump(cfg)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::filesystem::path default_out_root()
{
    if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') {
        return env;
    }
    return "runs";
}

}  // namespace ro2o::exp
