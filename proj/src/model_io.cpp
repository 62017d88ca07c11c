#include "knnids/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "knnids/error.hpp"
#include "knnids/io.hpp"

namespace knnids::streams {

namespace {

using nlohmann::json;

json body_of(const ModelFile& f) {
    const auto& m = f.model;
    json reference = json::array();
    for (std::size_t i = 0; i < m.reference.size(); ++i) {
        const auto row = m.reference.row(i);
        reference.push_back(std::vector<double>(row.begin(), row.end()));
    }
    json j{{"version", kModelVersion},
           {"d", m.d},
           {"M", m.M},
           {"params",
            {{"k", m.params.k}, {"s", m.params.s}, {"gamma", m.params.gamma}, {"alpha", m.params.alpha}, {"h", m.params.h}}},
           {"bounds", {{"mins", m.bounds.mins}, {"maxs", m.bounds.maxs}}},
           {"reference", std::move(reference)},
           {"baseline_LM", m.baseline_LM},
           {"phi", m.evidence_bound_phi}};
    if (f.calibration) {
        const auto& c = *f.calibration;
        j["calibration"] = {{"beta", c.beta}, {"v_d", c.v_d}, {"theta", c.theta}, {"omega0", c.omega0}, {"h", c.h}};
    } else {
        j["calibration"] = nullptr;
    }
    return j;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    std::string hex;
    hex.reserve(2 * len);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

std::string model_to_string(const ModelFile& m) {
    auto j = body_of(m);
    j["checksum"] = sha256_hex(j.dump());
    return j.dump() + "\n";
}

ModelFile model_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CorruptModel(std::string("model file does not parse: ") + e.what());
    }
    if (!j.is_object()) throw CorruptModel("model file is not a JSON object");
    if (!j.contains("version") || !j["version"].is_string()) throw CorruptModel("model file has no version tag");
    const auto version = j["version"].get<std::string>();
    if (version != kModelVersion) {
        throw VersionMismatch("unsupported model version '" + version + "', expected '" + kModelVersion + "'");
    }
    if (!j.contains("checksum") || !j["checksum"].is_string()) throw CorruptModel("model file has no checksum");
    const auto stored = j["checksum"].get<std::string>();
    j.erase("checksum");
    if (sha256_hex(j.dump()) != stored) throw CorruptModel("model checksum mismatch");

    ModelFile f;
    try {
        auto& m = f.model;
        m.d = j.at("d").get<std::size_t>();
        m.M = j.at("M").get<std::size_t>();
        const auto& p = j.at("params");
        m.params = {p.at("k").get<std::size_t>(), p.at("s").get<std::size_t>(), p.at("gamma").get<double>(),
                    p.at("alpha").get<double>(), p.at("h").get<double>()};
        m.bounds = {j.at("bounds").at("mins").get<std::vector<double>>(),
                    j.at("bounds").at("maxs").get<std::vector<double>>()};
        std::vector<double> rows;
        for (const auto& r : j.at("reference")) {
            const auto row = r.get<std::vector<double>>();
            if (row.size() != m.d) throw CorruptModel("reference row has wrong dimension");
            rows.insert(rows.end(), row.begin(), row.end());
        }
        m.reference = detector::ReferenceSet(m.d, std::move(rows));
        m.baseline_LM = j.at("baseline_LM").get<double>();
        m.evidence_bound_phi = j.at("phi").get<double>();
        const auto& c = j.at("calibration");
        if (!c.is_null()) {
            f.calibration = calibrate::Calibration{c.at("beta").get<double>(), c.at("v_d").get<double>(),
                                                   c.at("theta").get<double>(), m.evidence_bound_phi,
                                                   c.at("omega0").get<double>(), c.at("h").get<double>()};
        }
    } catch (const json::exception& e) {
        throw CorruptModel(std::string("model file is missing or mistyped a field: ") + e.what());
    }
    return f;
}

void save_model(const ModelFile& m, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << model_to_string(m);
    out.flush();
    if (!out) throw DataError("write to '" + path.string() + "' failed");
}

ModelFile load_model(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return model_from_string(text);
}

}  // namespace knnids::streams
