#include "mvlogit/eeg.hpp"

#include "mvlogit/parallel.hpp"
#include "mvlogit/simulation.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <regex>
#include <sstream>
#include <tuple>

namespace mvlogit {

const std::vector<std::string>& canonical_eeg_channels()
{
    static const std::vector<std::string> names = {
        "FP1", "FP2", "F7",  "F8",  "AF1", "AF2", "FZ",  "F4",  "F3",  "FC6", "FC5", "FC2", "FC1",
        "T8",  "T7",  "CZ",  "C3",  "C4",  "CP5", "CP6", "CP1", "CP2", "P3",  "P4",  "PZ",  "P8",
        "P7",  "PO2", "PO1", "O2",  "O1",  "X",   "AF7", "AF8", "F5",  "F6",  "FT7", "FT8", "FPZ",
        "FC4", "FC3", "C6",  "C5",  "F2",  "F1",  "TP8", "TP7", "AFZ", "CP3", "CP4", "P5",  "P6",
        "C1",  "C2",  "PO7", "PO8", "FCZ", "POZ", "OZ",  "P2",  "P1",  "CPZ", "ND",  "Y"};
    return names;
}

std::string to_string(EegCondition c)
{
    switch (c) {
    case EegCondition::SingleStimulus: return "S1 obj";
    case EegCondition::Matched: return "S2 match";
    case EegCondition::Unmatched: return "S2 nomatch";
    }
    return "?";
}

namespace {

std::string lower(std::string s)
{
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string upper(std::string s)
{
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

int channel_index(const std::string& name)
{
    static const std::map<std::string, int> lookup = [] {
        std::map<std::string, int> m;
        const auto& names = canonical_eeg_channels();
        for (std::size_t i = 0; i < names.size(); ++i) m[names[i]] = static_cast<int>(i);
        return m;
    }();
    auto it = lookup.find(upper(name));
    return it == lookup.end() ? -1 : it->second;
}

template <class T>
bool parse_number(const std::string& s, T& out)
{
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if constexpr (std::is_floating_point_v<T>)
        if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

struct TrialAccumulator {
    std::optional<EegCondition> condition;
    bool error_flag = false;
    Matrix values = Matrix::Constant(kEegSamples, kEegChannels, std::numeric_limits<double>::quiet_NaN());
    Index filled = 0;
};

struct ConditionHeader {
    EegCondition condition;
    bool error_flag;
    std::optional<int> trial;
};

std::optional<ConditionHeader> parse_condition_header(const std::string& text)
{
    static const std::regex cond(R"((s1\s*obj|s2\s*nomatch|s2\s*match))", std::regex::icase);
    static const std::regex trial(R"(trial\s*#?\s*(\d+))", std::regex::icase);
    std::smatch m;
    if (!std::regex_search(text, m, cond)) return std::nullopt;
    const std::string tag = lower(m[1].str());
    ConditionHeader h;
    if (tag.rfind("s1", 0) == 0)
        h.condition = EegCondition::SingleStimulus;
    else if (tag.find("nomatch") != std::string::npos)
        h.condition = EegCondition::Unmatched;
    else
        h.condition = EegCondition::Matched;
    static const std::regex err(R"(\berr\b)", std::regex::icase);
    h.error_flag = std::regex_search(text, err);
    if (std::regex_search(text, m, trial)) h.trial = std::stoi(m[1].str());
    return h;
}

std::string subject_from_source(const std::string& source)
{
    std::string name = std::filesystem::path(source).filename().string();
    const auto dot = name.find('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

}  // namespace

std::optional<EegCondition> eeg_condition_from_string(const std::string& name)
{
    const std::string s = lower(trim(name));
    if (s == "all" || s == "any") return std::nullopt;
    if (s == "s1" || s == "single" || s == "s1 obj" || s == "single-stimulus") return EegCondition::SingleStimulus;
    if (s == "match" || s == "matched" || s == "s2 match") return EegCondition::Matched;
    if (s == "nomatch" || s == "unmatched" || s == "s2 nomatch") return EegCondition::Unmatched;
    throw ValidationError("unknown EEG condition '" + name + "' (expected s1, match, nomatch or all)");
}

bool eeg_subject_is_alcoholic(const std::string& subject)
{
    if (subject.size() >= 4) {
        const char g = static_cast<char>(std::tolower(static_cast<unsigned char>(subject[3])));
        if (g == 'a') return true;
        if (g == 'c') return false;
    }
    throw ValidationError("cannot tell the group of subject '" + subject +
                          "' (fourth character should be 'a' or 'c')");
}

EegTrialError::EegTrialError(EegRejection r)
    : ValidationError(r.source + ": trial " + std::to_string(r.trial) + " of subject " + r.subject + " rejected: " +
                      r.reason),
      rejection_(std::move(r))
{
}

EegParseResult parse_eeg_stream(std::istream& in, const std::string& source)
{
    std::string subject;
    std::optional<ConditionHeader> header;
    std::map<int, TrialAccumulator> trials;

    std::string line;
    std::size_t lineno = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '#') {
            const std::string text = trim(t.substr(1));
            if (!seen_header) {
                seen_header = true;
                const auto rd = text.find(".rd");
                if (rd != std::string::npos && text.find(' ') == std::string::npos) subject = text.substr(0, rd);
            }
            if (auto h = parse_condition_header(text)) header = h;
            continue;
        }

        const std::string where = source + ":" + std::to_string(lineno);
        std::istringstream ss(t);
        std::vector<std::string> f;
        for (std::string tok; ss >> tok;) f.push_back(tok);
        if (f.size() != 3 && f.size() != 4)
            throw ValidationError(where + ": expected 'trial channel sample value' or 'channel sample value', got " +
                                  std::to_string(f.size()) + " fields");
        const std::size_t o = f.size() - 3;
        int trial = header && header->trial ? *header->trial : 0;
        if (o == 1 && !parse_number(f[0], trial)) throw ValidationError(where + ": bad trial number '" + f[0] + "'");
        const int ch = channel_index(f[o]);
        if (ch < 0) throw ValidationError(where + ": unknown channel '" + f[o] + "'");
        int sample = 0;
        if (!parse_number(f[o + 1], sample)) throw ValidationError(where + ": bad sample index '" + f[o + 1] + "'");
        if (sample < 0 || sample >= kEegSamples)
            throw ValidationError(where + ": sample index " + std::to_string(sample) + " outside 0.." +
                                  std::to_string(kEegSamples - 1));
        double value = 0.0;
        if (!parse_number(f[o + 2], value) || !std::isfinite(value))
            throw ValidationError(where + ": bad voltage '" + f[o + 2] + "'");

        auto [it, inserted] = trials.try_emplace(trial);
        TrialAccumulator& acc = it->second;
        if (inserted && header) {
            acc.condition = header->condition;
            acc.error_flag = header->error_flag;
        }
        double& slot = acc.values(sample, ch);
        if (!std::isnan(slot))
            throw ValidationError(where + ": duplicate value for channel " + canonical_eeg_channels()[ch] +
                                  " sample " + std::to_string(sample));
        slot = value;
        ++acc.filled;
    }
    if (subject.empty()) subject = subject_from_source(source);
    const bool alcoholic = eeg_subject_is_alcoholic(subject);

    EegParseResult out;
    for (auto& [number, acc] : trials) {
        EegRejection r{source, subject, number, {}};
        if (!acc.condition) {
            r.reason = "no condition header (S1 obj / S2 match / S2 nomatch) before the data";
        } else if (acc.filled < kEegSamples * kEegChannels) {
            Index first = 0;  // column-major position of the first gap
            while (!std::isnan(acc.values(first % kEegSamples, first / kEegSamples))) ++first;
            r.reason = "truncated: " + std::to_string(acc.filled) + " of " +
                       std::to_string(kEegSamples * kEegChannels) + " values, first missing channel " +
                       canonical_eeg_channels()[static_cast<std::size_t>(first / kEegSamples)] + " sample " +
                       std::to_string(first % kEegSamples);
        }
        if (!r.reason.empty()) {
            out.rejected.push_back(std::move(r));
            continue;
        }
        EegTrialRecord rec;
        rec.subject = subject;
        rec.alcoholic = alcoholic;
        rec.trial = number;
        rec.condition = *acc.condition;
        rec.error_flag = acc.error_flag;
        rec.voltages = std::move(acc.values);
        rec.source = source;
        out.trials.push_back(std::move(rec));
    }
    return out;
}

EegParseResult parse_eeg_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    return parse_eeg_stream(in, path.string());
}

EegIngest ingest_eeg(const std::filesystem::path& directory, const EegIngestOptions& options)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(directory, ec)) throw ValidationError("not a directory: " + directory.string());

    EegIngest out;
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(directory)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        const std::string ext = lower(entry.path().extension().string());
        if (name.empty() || name.front() == '.' || ext == ".gz" || ext == ".tar" || ext == ".zip" || ext == ".tgz") {
            out.skipped_files.push_back(entry.path().string());
            continue;
        }
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::sort(out.skipped_files.begin(), out.skipped_files.end());
    if (files.empty()) throw ValidationError("no EEG trial files under " + directory.string());

    std::vector<EegParseResult> parsed(files.size());
    std::vector<std::exception_ptr> errors(files.size());
    parallel_for(files.size(), options.threads, [&](std::size_t i) {
        try {
            parsed[i] = parse_eeg_file(files[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    out.files_read = static_cast<int>(files.size());

    struct SubjectAccumulator {
        bool alcoholic = false;
        Matrix sum = Matrix::Zero(kEegSamples, kEegChannels);
        int retained = 0;
    };
    std::map<std::string, SubjectAccumulator> subjects;
    std::map<std::tuple<std::string, int, int>, std::string> seen;
    auto reject = [&](EegRejection r) {
        if (options.strict) throw EegTrialError(std::move(r));
        out.rejected.push_back(std::move(r));
    };
    for (EegParseResult& file : parsed) {
        for (EegRejection& r : file.rejected) {
            subjects.try_emplace(r.subject).first->second.alcoholic = eeg_subject_is_alcoholic(r.subject);
            reject(std::move(r));
        }
        for (EegTrialRecord& t : file.trials) {
            SubjectAccumulator& acc = subjects.try_emplace(t.subject).first->second;
            acc.alcoholic = t.alcoholic;
            if (options.condition && t.condition != *options.condition) continue;
            const auto key = std::make_tuple(t.subject, static_cast<int>(t.condition), t.trial);
            if (auto [it, fresh] = seen.emplace(key, t.source); !fresh) {
                reject({t.source, t.subject, t.trial, "duplicate of the same trial in " + it->second});
                continue;
            }
            if (t.error_flag && !options.keep_error_trials) {
                reject({t.source, t.subject, t.trial, "trial marked err in the recording"});
                continue;
            }
            acc.sum += t.voltages;
            ++acc.retained;
        }
    }

    std::vector<Matrix> ms;
    std::vector<int> labels;
    std::vector<std::string> ids;
    for (auto& [id, acc] : subjects) {
        if (acc.retained == 0)
            throw ValidationError("subject " + id + " has no retained trials" +
                                  (options.condition ? " for condition " + to_string(*options.condition) : ""));
        ms.push_back(acc.sum / static_cast<double>(acc.retained));
        labels.push_back(acc.alcoholic ? 1 : 0);
        ids.push_back(id);
        out.subjects.push_back({id, acc.alcoholic, acc.retained});
    }
    out.data = MatrixDataset(std::move(ms), std::move(labels), std::move(ids));
    out.channels = canonical_eeg_channels();
    return out;
}

// ---------------------------------------------------------------------------
// synthetic recordings

namespace {

double spatial_weight(const std::string& ch)
{
    if (ch.find('P') != std::string::npos && ch != "FP1" && ch != "FP2" && ch != "FPZ") return 1.0;
    if (ch.find('C') != std::string::npos) return 0.7;
    if (ch.find('O') != std::string::npos) return 0.6;
    if (ch.find('F') != std::string::npos) return 0.3;
    return 0.1;
}

double evoked_profile(Index t)
{
    const double a = (static_cast<double>(t) - 77.0) / 15.0;
    const double b = (static_cast<double>(t) - 40.0) / 10.0;
    return std::exp(-0.5 * a * a) - 0.5 * std::exp(-0.5 * b * b);
}

void write_trial(const std::filesystem::path& path, const std::string& subject, int trial, EegCondition cond,
                 const Matrix& v)
{
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    const auto& names = canonical_eeg_channels();
    out << "# " << subject << ".rd\n";
    out << "# 120 trials, 64 chans, 416 samples 368 post_stim samples\n";
    out << "# 3.906000 msecs uV\n";
    out << "# " << to_string(cond) << " , trial " << trial << "\n";
    char buf[96];
    for (Index c = 0; c < kEegChannels; ++c) {
        out << "# " << names[static_cast<std::size_t>(c)] << " chan " << c << "\n";
        for (Index s = 0; s < kEegSamples; ++s) {
            std::snprintf(buf, sizeof buf, "%d %s %d %.3f\n", trial, names[static_cast<std::size_t>(c)].c_str(),
                          static_cast<int>(s), v(s, c));
            out << buf;
        }
    }
    if (!out) throw ValidationError("write failed for " + path.string());
}

}  // namespace

int write_eeg_fixture(const std::filesystem::path& directory, const EegFixtureOptions& options)
{
    if (options.alcoholic < 1 || options.control < 1) throw ValidationError("fixture needs subjects in both groups");
    if (options.trials < 1 || options.other_trials < 0) throw ValidationError("fixture trial counts out of range");
    const auto& names = canonical_eeg_channels();
    Vector profile(kEegSamples);
    for (Index t = 0; t < kEegSamples; ++t) profile(t) = evoked_profile(t);
    Vector weight(kEegChannels);
    for (Index c = 0; c < kEegChannels; ++c) weight(c) = spatial_weight(names[static_cast<std::size_t>(c)]);
    const Matrix evoked = profile * weight.transpose();

    int written = 0;
    const int total = options.alcoholic + options.control;
    for (int s = 0; s < total; ++s) {
        const bool alcoholic = s < options.alcoholic;
        char id[32];
        std::snprintf(id, sizeof id, "co2%c%07d", alcoholic ? 'a' : 'c', 1000 + s);
        const std::string subject = id;
        std::mt19937_64 rng(derive_seed(options.seed, static_cast<std::uint64_t>(s)));
        std::normal_distribution<double> z(0.0, 1.0);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

        // subject-level evoked amplitude and a fixed spatial offset pattern
        const double amplitude = 10.0 - (alcoholic ? options.effect : 0.0) + 2.0 * z(rng);
        Vector offset(kEegChannels);
        for (Index c = 0; c < kEegChannels; ++c) offset(c) = 3.0 * z(rng);

        const std::filesystem::path dir = directory / subject;
        std::filesystem::create_directories(dir);
        const int n_trials = options.trials + options.other_trials;
        for (int k = 0; k < n_trials; ++k) {
            const EegCondition cond = k < options.trials ? EegCondition::SingleStimulus : EegCondition::Matched;
            Matrix v = amplitude * evoked;
            for (Index c = 0; c < kEegChannels; ++c) {
                const double ph = phase(rng);
                double ar = 3.0 * z(rng);
                for (Index t = 0; t < kEegSamples; ++t) {
                    ar = 0.9 * ar + 3.0 * z(rng);
                    v(t, c) += offset(c) + ar + 4.0 * std::sin(2.0 * std::numbers::pi * t / 25.6 + ph);
                }
            }
            char file[64];
            std::snprintf(file, sizeof file, "%s.rd.%03d", subject.c_str(), k);
            write_trial(dir / file, subject, k, cond, v);
            ++written;
        }
    }
    return written;
}

}  // namespace mvlogit
