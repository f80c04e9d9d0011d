#include <rotordiag/error.hpp>
#include <rotordiag/pipeline.hpp>

#include <fstream>
#include <sstream>

namespace rotordiag::pipeline {

std::string to_string(Label v) { return v == Label::Broken ? "broken" : "unbroken"; }

std::string to_string(PropellerSet v) {
    switch (v) {
    case PropellerSet::Config1: return "config1";
    case PropellerSet::Config2: return "config2";
    case PropellerSet::Config3: return "config3";
    }
    return "?";
}

std::string to_string(Thrust v) {
    switch (v) {
    case Thrust::Low: return "low";
    case Thrust::Medium: return "medium";
    case Thrust::High: return "high";
    }
    return "?";
}

Label parse_label(const std::string& s) {
    if (s == "broken")
        return Label::Broken;
    if (s == "unbroken")
        return Label::Unbroken;
    fail(Errc::Malformed, "manifest: unknown label '" + s + "'");
}

PropellerSet parse_propeller_set(const std::string& s) {
    if (s == "config1")
        return PropellerSet::Config1;
    if (s == "config2")
        return PropellerSet::Config2;
    if (s == "config3")
        return PropellerSet::Config3;
    fail(Errc::Malformed, "manifest: unknown config '" + s + "'");
}

Thrust parse_thrust(const std::string& s) {
    if (s == "low")
        return Thrust::Low;
    if (s == "medium")
        return Thrust::Medium;
    if (s == "high")
        return Thrust::High;
    fail(Errc::Malformed, "manifest: unknown thrust '" + s + "'");
}

double thrust_multiplier(Thrust t) {
    switch (t) {
    case Thrust::Low: return 0.8;
    case Thrust::Medium: return 1.0;
    case Thrust::High: return 1.2;
    }
    return 1.0;
}

void check_record(const SampleRecord& r) {
    const bool healthy_set = r.propeller_set == PropellerSet::Config1;
    require(healthy_set == (r.label == Label::Unbroken), Errc::Malformed,
            "manifest: " + r.image_path + " labelled " + to_string(r.label) + " but propeller set is " +
                to_string(r.propeller_set));
}

std::filesystem::path DatasetManifest::resolve(const SampleRecord& r) const {
    const std::filesystem::path p(r.image_path);
    return p.is_absolute() ? p : root / p;
}

std::vector<std::size_t> DatasetManifest::indices_of(Label label) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].label == label)
            idx.push_back(i);
    return idx;
}

std::vector<std::size_t> DatasetManifest::all_indices() const {
    std::vector<std::size_t> idx(records.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        idx[i] = i;
    return idx;
}

namespace {

constexpr const char* kHeader = "path,label,quadrotor,config,thrust";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, ','))
        fields.push_back(cur);
    if (!line.empty() && line.back() == ',')
        fields.emplace_back();
    return fields;
}

} // namespace

std::string format_manifest(const DatasetManifest& manifest) {
    std::ostringstream out;
    out << kHeader << '\n';
    for (const auto& r : manifest.records) {
        require(r.image_path.find(',') == std::string::npos && r.quadrotor.find(',') == std::string::npos,
                Errc::InvalidArgument, "manifest: fields may not contain commas");
        out << r.image_path << ',' << to_string(r.label) << ',' << r.quadrotor << ','
            << to_string(r.propeller_set) << ',' << to_string(r.thrust) << '\n';
    }
    return out.str();
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        fail(Errc::Io, "cannot write manifest " + path.string());
    out << format_manifest(manifest);
    if (!out)
        fail(Errc::Io, "write failed on " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
        fail(Errc::FileNotFound, "no such manifest: " + path.string());
    std::ifstream in(path);
    if (!in)
        fail(Errc::Io, "cannot open manifest " + path.string());

    DatasetManifest m;
    m.root = path.parent_path();
    std::string line;
    if (!std::getline(in, line))
        fail(Errc::Malformed, "manifest: empty file " + path.string());
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != kHeader)
        fail(Errc::Malformed, "manifest: expected header '" + std::string(kHeader) + "'");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto f = split_csv(line);
        if (f.size() != 5)
            fail(Errc::Malformed, "manifest: line " + std::to_string(lineno) + " has " +
                                      std::to_string(f.size()) + " fields, expected 5");
        SampleRecord r{f[0], parse_label(f[1]), f[2], parse_propeller_set(f[3]), parse_thrust(f[4])};
        check_record(r);
        m.records.push_back(std::move(r));
    }
    return m;
}

} // namespace rotordiag::pipeline
