#include "cvarrl/serialize.hpp"

#include <fstream>

#include "cvarrl/errors.hpp"
#include "cvarrl/value_iteration.hpp"

namespace cvarrl {

using nlohmann::json;

namespace {

json matrix_rows(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c)
            row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

json instance_to_json(const LowRankModel& model, const RewardModel& rewards) {
    json doc;
    doc["H"] = model.H;
    doc["A"] = model.A;
    doc["d"] = model.d;
    doc["states"] = model.num_states;
    doc["upsilon"] = rewards.upsilon;
    json phi = json::array();
    json psi = json::array();
    for (int h = 1; h <= model.H - 1; ++h) {
        json phi_h = json::array();
        for (int s = 0; s < model.num_states; ++s) {
            json per_action = json::array();
            for (int a = 0; a < model.A; ++a) {
                json feat = json::array();
                for (int j = 0; j < model.d; ++j)
                    feat.push_back(model.phi[h - 1](model.feature_row(s, a), j));
                per_action.push_back(std::move(feat));
            }
            phi_h.push_back(std::move(per_action));
        }
        phi.push_back(std::move(phi_h));
        psi.push_back(matrix_rows(model.psi[h - 1]));
    }
    doc["phi"] = std::move(phi);
    doc["psi"] = std::move(psi);
    json pmf = json::array();
    for (int h = 1; h <= model.H; ++h) {
        json pmf_h = json::array();
        for (int s = 0; s < model.num_states; ++s) {
            json per_action = json::array();
            for (int a = 0; a < model.A; ++a) {
                json row = json::array();
                for (int i = 0; i < rewards.grid_size(); ++i)
                    row.push_back(rewards.pmf[h - 1](s * model.A + a, i));
                per_action.push_back(std::move(row));
            }
            pmf_h.push_back(std::move(per_action));
        }
        pmf.push_back(std::move(pmf_h));
    }
    doc["reward_pmf"] = std::move(pmf);
    return doc;
}

std::pair<LowRankModel, RewardModel> instance_from_json(const json& doc) {
    LowRankModel model;
    RewardModel rewards;
    try {
        model.H = doc.at("H").get<int>();
        model.A = doc.at("A").get<int>();
        model.d = doc.at("d").get<int>();
        model.num_states = doc.at("states").get<int>();
        rewards.upsilon = doc.at("upsilon").get<double>();
        const json& phi = doc.at("phi");
        const json& psi = doc.at("psi");
        for (int h = 1; h <= model.H - 1; ++h) {
            Eigen::MatrixXd phi_h(model.num_states * model.A, model.d);
            for (int s = 0; s < model.num_states; ++s)
                for (int a = 0; a < model.A; ++a)
                    for (int j = 0; j < model.d; ++j)
                        phi_h(model.feature_row(s, a), j) =
                            phi.at(h - 1).at(s).at(a).at(j).get<double>();
            Eigen::MatrixXd psi_h(model.num_states, model.d);
            for (int s = 0; s < model.num_states; ++s)
                for (int j = 0; j < model.d; ++j)
                    psi_h(s, j) = psi.at(h - 1).at(s).at(j).get<double>();
            model.phi.push_back(std::move(phi_h));
            model.psi.push_back(std::move(psi_h));
        }
        const json& pmf = doc.at("reward_pmf");
        const int grid = static_cast<int>(pmf.at(0).at(0).at(0).size());
        for (int h = 1; h <= model.H; ++h) {
            Eigen::MatrixXd pmf_h(model.num_states * model.A, grid);
            for (int s = 0; s < model.num_states; ++s)
                for (int a = 0; a < model.A; ++a)
                    for (int i = 0; i < grid; ++i)
                        pmf_h(s * model.A + a, i) =
                            pmf.at(h - 1).at(s).at(a).at(i).get<double>();
            rewards.pmf.push_back(std::move(pmf_h));
        }
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("instance_from_json: ") + e.what());
    }
    return {std::move(model), std::move(rewards)};
}

json policy_to_json(const AugmentedPolicy& policy) {
    json doc;
    doc["H"] = policy.H();
    doc["states"] = policy.num_states;
    doc["A"] = policy.A;
    doc["upsilon"] = policy.grid.upsilon;
    doc["max_index"] = policy.grid.max_index;
    json tables = json::array();
    for (const Eigen::MatrixXd& t : policy.pi)
        tables.push_back(matrix_rows(t));
    doc["pi"] = std::move(tables);
    return doc;
}

AugmentedPolicy policy_from_json(const json& doc) {
    AugmentedPolicy policy;
    try {
        const int H = doc.at("H").get<int>();
        policy.num_states = doc.at("states").get<int>();
        policy.A = doc.at("A").get<int>();
        policy.grid.upsilon = doc.at("upsilon").get<double>();
        policy.grid.max_index = doc.at("max_index").get<int>();
        const json& tables = doc.at("pi");
        for (int h = 1; h <= H; ++h) {
            const json& rows = tables.at(h - 1);
            Eigen::MatrixXd t(static_cast<long>(policy.num_states) * policy.grid.size(),
                              policy.A);
            for (long r = 0; r < t.rows(); ++r)
                for (int a = 0; a < policy.A; ++a)
                    t(r, a) = rows.at(r).at(a).get<double>();
            policy.pi.push_back(std::move(t));
        }
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("policy_from_json: ") + e.what());
    }
    return policy;
}

json value_table_to_json(const ValueTable& table) {
    json doc;
    doc["H"] = table.H;
    doc["states"] = table.num_states;
    doc["upsilon"] = table.grid.upsilon;
    doc["max_index"] = table.grid.max_index;
    json values = json::array();
    for (const Eigen::MatrixXd& v : table.V)
        values.push_back(matrix_rows(v));
    doc["V"] = std::move(values);
    return doc;
}

void write_json_file(const std::string& path, const json& doc) {
    std::ofstream out(path);
    if (!out)
        throw ConfigInvalid("write_json_file: cannot open " + path);
    out << doc.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigInvalid("read_json_file: cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigInvalid("read_json_file: " + path + ": " + e.what());
    }
}

} // namespace cvarrl
