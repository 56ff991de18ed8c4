#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <variant>

#include "sesim/devs/generators.hpp"
#include "sesim/devs/simulator.hpp"
#include "sesim/lang/coupled.hpp"
#include "sesim/lang/loader.hpp"
#include "test_support.hpp"
#include "test_support_ext.hpp"

using namespace sesim;
using namespace sesim::lang;

namespace {

// Probe feeding a watcher through the boundary: readings every 2 starting
// at 1; only the third exceeds the alarm limit.
const char* kProbeModel = R"(A Depth has a value!
the range of Depth's value is Integer!

generates output on Alarm with type Depth!

component probe emits on Out with type Depth every 2 starting at 1!
probe reading value 3!
probe reading value 7!
probe reading value 12!

component watcher watches In with type Depth and raises Alarm when value exceeds 10!

couple probe.Out to watcher.In!
couple watcher.Alarm to self.Alarm!
)";

CoupledAst parsed_c(const std::string& text, const std::string& source = "<input>") {
    auto r = parse_coupled(text, source);
    EXPECT_FALSE(has_errors(r.diagnostics)) << format_diagnostics(r.diagnostics);
    return std::move(r.ast);
}

ComponentResolver no_files() {
    return [](const std::string& file) -> devs::Component {
        throw Error("FILE_NOT_FOUND", "unexpected file reference '" + file + "'");
    };
}

std::vector<const devs::Event*> outputs_on(const devs::EventTrace& trace,
                                           const std::string& port) {
    std::vector<const devs::Event*> out;
    for (const auto& e : trace.events)
        if (e.kind == devs::EventKind::output && e.port == port) out.push_back(&e);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Builtin component builders
// ---------------------------------------------------------------------------

TEST(Generators, PeriodicSourceEmitsEachReadingOnSchedule) {
    devs::TypeRegistry reg;
    reg.emplace("Depth", ts::int_value_type("Depth"));
    std::vector<devs::MessageValue> readings{ts::int_record("Depth", 4),
                                             ts::int_record("Depth", 5)};
    auto spec = devs::periodic_source("s", "Out", "Depth", reg, 3, 2, readings);
    EXPECT_FALSE(has_errors(devs::validate_atomic(spec)));

    devs::Simulator sim{spec};
    auto trace = sim.advance(devs::SimTime::of(20));
    auto outs = outputs_on(trace, "Out");
    ASSERT_EQ(outs.size(), 2u);
    EXPECT_EQ(outs[0]->time, devs::SimTime::of(2));
    EXPECT_EQ(*outs[0]->value, ts::int_record("Depth", 4));
    EXPECT_EQ(outs[1]->time, devs::SimTime::of(5));
    EXPECT_EQ(*outs[1]->value, ts::int_record("Depth", 5));
    EXPECT_TRUE(sim.next_event_time().is_infinite());
}

TEST(Generators, PeriodicSourceAnnouncesBeforeItsFirstReading) {
    devs::TypeRegistry reg;
    reg.emplace("Depth", ts::int_value_type("Depth"));
    auto spec = devs::periodic_source("s", "Out", "Depth", reg, 5, 6,
                                      {ts::int_record("Depth", 1)},
                                      devs::Announce{"Hello", "Depth", 1});
    devs::Simulator sim{spec};
    auto trace = sim.advance(devs::SimTime::of(10));
    auto hello = outputs_on(trace, "Hello");
    ASSERT_EQ(hello.size(), 1u);
    EXPECT_EQ(hello[0]->time, devs::SimTime::of(1));
    EXPECT_EQ(*hello[0]->value, ts::int_record("Depth", 0));  // the type's zero value
    auto outs = outputs_on(trace, "Out");
    ASSERT_EQ(outs.size(), 1u);
    EXPECT_EQ(outs[0]->time, devs::SimTime::of(6));
}

TEST(Generators, PeriodicSourceRejectsInconsistentTiming) {
    devs::TypeRegistry reg;
    reg.emplace("Depth", ts::int_value_type("Depth"));
    EXPECT_EQ(ts::error_code([&] {
                  devs::periodic_source("s", "Out", "Depth", reg, 0, 1, {});
              }),
              "NONPOSITIVE_PERIOD");
    EXPECT_EQ(ts::error_code([&] {
                  devs::periodic_source("s", "Out", "Depth", reg, 1, 1, {},
                                        devs::Announce{"Hello", "Depth", 2});
              }),
              "BAD_TIME");
}

TEST(Generators, ThresholdMonitorForwardsOnlyWhatExceedsTheLimit) {
    devs::TypeRegistry reg;
    reg.emplace("Depth", ts::int_value_type("Depth"));
    auto spec = devs::threshold_monitor("w", "In", "Depth", reg, "Alarm", {"value"}, 10);
    EXPECT_FALSE(has_errors(devs::validate_atomic(spec)));

    devs::Simulator sim{spec};
    sim.inject(devs::SimTime::of(1), {}, "In", ts::int_record("Depth", 10));  // not >
    sim.inject(devs::SimTime::of(2), {}, "In", ts::int_record("Depth", 11));
    sim.inject(devs::SimTime::of(3), {}, "In", ts::int_record("Depth", 2));
    auto trace = sim.advance(devs::SimTime::of(10));
    auto alarms = outputs_on(trace, "Alarm");
    ASSERT_EQ(alarms.size(), 1u);
    EXPECT_EQ(alarms[0]->time, devs::SimTime::of(2));  // same instant as the trigger
    EXPECT_EQ(*alarms[0]->value, ts::int_record("Depth", 11));
}

TEST(Generators, NumericFieldSetterWalksNestedRecordsAndChecksKinds) {
    auto reg = ts::mediator_types();
    auto m = devs::zero_value("Measure", reg);
    EXPECT_TRUE(devs::set_numeric_field(m, "Measure", reg, {"depth", "value"}, 7));
    EXPECT_TRUE(
        devs::set_numeric_field(m, "Measure", reg, {"coordinate", "x", "value"}, 3));
    EXPECT_EQ(m, ts::measure(3, 0, 7));

    EXPECT_FALSE(devs::set_numeric_field(m, "Measure", reg, {"depth"}, 7));  // record leaf
    EXPECT_FALSE(devs::set_numeric_field(m, "Measure", reg, {"ghost"}, 7));
    EXPECT_FALSE(
        devs::set_numeric_field(m, "Measure", reg, {"depth", "value"}, 7.5));  // not integral
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

TEST(CoupledParser, RecognizesEverySentenceForm) {
    auto ast = parsed_c(kProbeModel, "probe.devsc");
    int types = 0, ranges = 0, ports = 0, sources = 0, readings = 0, monitors = 0,
        couples = 0;
    for (const auto& s : ast.statements) {
        types += std::holds_alternative<TypeDeclStmt>(s);
        ranges += std::holds_alternative<RangeDeclStmt>(s);
        ports += std::holds_alternative<PortDeclStmt>(s);
        sources += std::holds_alternative<SourceDeclStmt>(s);
        readings += std::holds_alternative<ReadingStmt>(s);
        monitors += std::holds_alternative<MonitorDeclStmt>(s);
        couples += std::holds_alternative<CoupleStmt>(s);
    }
    EXPECT_EQ(types, 1);
    EXPECT_EQ(ranges, 1);
    EXPECT_EQ(ports, 1);
    EXPECT_EQ(sources, 1);
    EXPECT_EQ(readings, 3);
    EXPECT_EQ(monitors, 1);
    EXPECT_EQ(couples, 2);
}

TEST(CoupledParser, CapturesComponentAndCouplingDetails) {
    auto ast = parsed_c("component m1 from \"mediator.devsnl\"!\n"
                        "component s1 emits on Pos with type Coordinate every 5 starting at 6!\n"
                        "s1 announces on Pos with type Coordinate at time 1!\n"
                        "s1 reading coordinate.x.value 3 and depth.value 9!\n"
                        "couple s1.Pos to m1.FromCoordinate!\n"
                        "couple m1.Measure to self.Out!");
    const auto& cf = std::get<ComponentFileStmt>(ast.statements[0]);
    EXPECT_EQ(cf.name, "m1");
    EXPECT_EQ(cf.file, "mediator.devsnl");

    const auto& sd = std::get<SourceDeclStmt>(ast.statements[1]);
    EXPECT_EQ(sd.name, "s1");
    EXPECT_EQ(sd.port, "Pos");
    EXPECT_EQ(sd.type, "Coordinate");
    EXPECT_DOUBLE_EQ(sd.period, 5);
    EXPECT_DOUBLE_EQ(sd.start, 6);

    const auto& an = std::get<AnnounceStmt>(ast.statements[2]);
    EXPECT_EQ(an.component, "s1");
    EXPECT_DOUBLE_EQ(an.time, 1);

    const auto& rd = std::get<ReadingStmt>(ast.statements[3]);
    ASSERT_EQ(rd.fields.size(), 2u);
    EXPECT_EQ(rd.fields[0].first, (std::vector<std::string>{"coordinate", "x", "value"}));
    EXPECT_DOUBLE_EQ(rd.fields[0].second, 3);
    EXPECT_DOUBLE_EQ(rd.fields[1].second, 9);

    const auto& c1 = std::get<CoupleStmt>(ast.statements[4]);
    EXPECT_EQ(c1.from_component, "s1");
    EXPECT_EQ(c1.to_component, "m1");
    const auto& c2 = std::get<CoupleStmt>(ast.statements[5]);
    EXPECT_EQ(c2.to_component, "");  // 'self' is the boundary
    EXPECT_EQ(c2.to_port, "Out");
}

TEST(CoupledParser, RejectsComponentOnlySentences) {
    auto r = parse_coupled("passivate in s1!\ncouple a.b to c.d!");
    EXPECT_TRUE(ts::has_error_code(r.diagnostics, "SYNTAX_ERROR"));
    EXPECT_EQ(r.ast.statements.size(), 1u);
}

// ---------------------------------------------------------------------------
// Checking
// ---------------------------------------------------------------------------

TEST(CoupledCheck, CleanModelHasNoDiagnostics) {
    auto diags = check_coupled(parsed_c(kProbeModel, "probe.devsc"));
    EXPECT_TRUE(diags.empty()) << format_diagnostics(diags);
}

TEST(CoupledCheck, FlagsBadComponentDeclarations) {
    auto diags = check_coupled(
        parsed_c("component a from \"x.devsnl\"!\n"
                 "component a emits on Out with type Depth every 1 starting at 0!\n"
                 "component self from \"y.devsnl\"!\n"
                 "component b emits on Out with type Depth every 0 starting at 0!"));
    EXPECT_TRUE(ts::has_error_code(diags, "DUPLICATE_COMPONENT"));
    EXPECT_TRUE(ts::has_error_code(diags, "BAD_CHILD_NAME"));
    EXPECT_TRUE(ts::has_error_code(diags, "NONPOSITIVE_PERIOD"));
    EXPECT_TRUE(ts::has_error_code(diags, "UNKNOWN_TYPE"));  // Depth never declared
}

TEST(CoupledCheck, FlagsReadingsAndAnnouncementsOnTheWrongComponents) {
    auto diags = check_coupled(
        parsed_c("A Depth has a value!\n"
                 "the range of Depth's value is Integer!\n"
                 "component m from \"m.devsnl\"!\n"
                 "component w watches In with type Depth and raises Alarm when value exceeds 1!\n"
                 "ghost reading value 1!\n"
                 "w reading value 2!\n"
                 "m announces on Out with type Depth at time 1!\n"
                 "phantom announces on Out with type Depth at time 1!"));
    EXPECT_TRUE(ts::has_error_code(diags, "UNKNOWN_COMPONENT"));
    EXPECT_TRUE(ts::has_error_code(diags, "BAD_READING"));
    EXPECT_TRUE(ts::has_error_code(diags, "BAD_ANNOUNCE"));
}

TEST(CoupledCheck, FlagsAnAnnouncementAfterTheFirstReading) {
    auto diags = check_coupled(
        parsed_c("A Depth has a value!\n"
                 "the range of Depth's value is Integer!\n"
                 "component s emits on Out with type Depth every 5 starting at 2!\n"
                 "s announces on Hello with type Depth at time 3!"));
    EXPECT_TRUE(ts::has_error_code(diags, "BAD_ANNOUNCE"));
}

TEST(CoupledCheck, FlagsCouplingsNamingUndeclaredComponents) {
    auto diags = check_coupled(parsed_c("couple ghost.Out to self.Out!"));
    EXPECT_TRUE(ts::has_error_code(diags, "UNKNOWN_COMPONENT"));
}

// ---------------------------------------------------------------------------
// Compilation
// ---------------------------------------------------------------------------

TEST(CoupledCompile, BuildsChildrenAndCouplingsInDeclarationOrder) {
    auto spec = compile_coupled(parsed_c(kProbeModel, "models/probe.devsc"), no_files());
    EXPECT_EQ(spec.name, "probe");
    ASSERT_EQ(spec.children.size(), 2u);
    EXPECT_EQ(spec.children[0].first, "probe");
    EXPECT_EQ(spec.children[1].first, "watcher");
    ASSERT_EQ(spec.couplings.size(), 2u);
    EXPECT_EQ(spec.couplings[0].from_component, "probe");
    EXPECT_EQ(spec.couplings[1].to_component, "");
    ASSERT_EQ(spec.ports.size(), 1u);
    EXPECT_EQ(spec.ports[0].name, "Alarm");
    EXPECT_FALSE(has_errors(devs::validate_coupled(spec)));
}

TEST(CoupledCompile, CompiledModelRaisesTheAlarmOnlyAboveTheLimit) {
    auto spec = compile_coupled(parsed_c(kProbeModel, "probe.devsc"), no_files());
    devs::Simulator sim{spec};
    auto trace = sim.advance(devs::SimTime::of(20));
    auto alarms = outputs_on(trace, "Alarm");
    ASSERT_EQ(alarms.size(), 1u);
    EXPECT_EQ(alarms[0]->path, (std::vector<std::string>{"watcher"}));
    EXPECT_EQ(alarms[0]->time, devs::SimTime::of(5));
    EXPECT_EQ(*alarms[0]->value, ts::int_record("Depth", 12));
}

TEST(CoupledCompile, ResolvesFileComponentsThroughTheResolver) {
    auto ast = parsed_c("A Depth has a value!\n"
                        "the range of Depth's value is Integer!\n"
                        "component c from \"counter.devsnl\"!\n"
                        "component s emits on Out with type Depth every 1 starting at 1!\n"
                        "s reading value 1!\n"
                        "couple s.Out to c.In!");
    bool asked = false;
    ComponentResolver resolve = [&](const std::string& file) {
        EXPECT_EQ(file, "counter.devsnl");
        asked = true;
        devs::AtomicSpec counter = ts::counter("c", 2);
        // Port compatibility is by type name; make the sink speak Depth.
        counter.data_types.clear();
        counter.data_types.emplace("Depth", ts::int_value_type("Depth"));
        counter.ports[0].message_type = "Depth";
        return devs::Component(std::move(counter));
    };
    auto spec = compile_coupled(ast, resolve);
    EXPECT_TRUE(asked);
    EXPECT_EQ(spec.children.size(), 2u);
}

TEST(CoupledCompile, ThrowsWhenAReadingCannotBeBuilt) {
    auto ast = parsed_c("A Depth has a value!\n"
                        "the range of Depth's value is Integer!\n"
                        "component s emits on Out with type Depth every 1 starting at 1!\n"
                        "s reading height 1!");
    EXPECT_EQ(ts::error_code([&] { compile_coupled(ast, no_files()); }), "BAD_READING");
}

TEST(CoupledCompile, ThrowsInvalidModelOnWiringErrors) {
    auto ast = parsed_c("A Depth has a value!\n"
                        "the range of Depth's value is Integer!\n"
                        "component s emits on Out with type Depth every 1 starting at 1!\n"
                        "couple s.Ghost to self.Out!\n"
                        "generates output on Out with type Depth!");
    try {
        compile_coupled(ast, no_files());
        FAIL() << "expected INVALID_MODEL";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), std::string("INVALID_MODEL"));
        EXPECT_TRUE(ts::has_error_code(e.diagnostics(), "UNKNOWN_PORT"));
    }
}

// ---------------------------------------------------------------------------
// Loading from disk
// ---------------------------------------------------------------------------

class LoaderTest : public ::testing::Test {
  protected:
    std::filesystem::path dir_;

    void SetUp() override {
        dir_ = std::filesystem::temp_directory_path() /
               ("sesim-loader-" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir_ / "nested");
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }

    void put(const std::string& rel, const std::string& text) {
        std::ofstream out(dir_ / rel, std::ios::binary);
        out << text;
    }
};

TEST_F(LoaderTest, LoadsACompositionAndItsFileChildrenRelatively) {
    put("nested/relay.devsnl",
        "A Depth has a value!\n"
        "the range of Depth's value is Integer!\n"
        "accepts input on In with type Depth!\n"
        "generates output on Out with type Depth!\n"
        "to start hold in idle for time 100!\n"
        "from idle go to idle!\n"
        "passivate in wait!\n"  // unreachable but legal
        "when in idle and receive In go to send!\n"
        "hold in send for time 0!\n"
        "after send output Out!\n"
        "from send go to idle!");
    put("chain.devsc",
        "A Depth has a value!\n"
        "the range of Depth's value is Integer!\n"
        "generates output on Out with type Depth!\n"
        "component r from \"nested/relay.devsnl\"!\n"
        "component s emits on Out with type Depth every 4 starting at 2!\n"
        "s reading value 5!\n"
        "s reading value 6!\n"
        "couple s.Out to r.In!\n"
        "couple r.Out to self.Out!");

    auto component = load_model_file(dir_ / "chain.devsc");
    devs::Simulator sim{std::move(component)};
    auto trace = sim.advance(devs::SimTime::of(20));
    std::vector<const devs::Event*> relayed;  // only the relay feeds the boundary
    for (const auto& e : trace.events)
        if (e.kind == devs::EventKind::output && e.path == std::vector<std::string>{"r"})
            relayed.push_back(&e);
    ASSERT_EQ(relayed.size(), 2u);
    EXPECT_EQ(relayed[0]->time, devs::SimTime::of(2));
    EXPECT_EQ(*relayed[0]->value, ts::int_record("Depth", 5));
    EXPECT_EQ(relayed[1]->time, devs::SimTime::of(6));
    EXPECT_EQ(*relayed[1]->value, ts::int_record("Depth", 6));
}

TEST_F(LoaderTest, CollectsWarningsFromEveryFileItTouches) {
    put("dup.devsnl",
        "A Depth has a value!\n"
        "the range of Depth's value is Integer!\n"
        "to start hold in s0 for time 1!\n"
        "hold in s0 for time 1!\n"  // benign repeat
        "from s0 go to s0!");
    put("top.devsc",
        "component d from \"dup.devsnl\"!");
    std::vector<Diagnostic> warnings;
    load_model_file(dir_ / "top.devsc", &warnings);
    EXPECT_TRUE(ts::has_warning_code(warnings, "DUPLICATE_HOLD"));
}

TEST_F(LoaderTest, ReportsMissingFilesAndUnknownExtensions) {
    EXPECT_EQ(ts::error_code([&] { load_model_file(dir_ / "ghost.devsc"); }),
              "FILE_NOT_FOUND");
    put("notes.txt", "hello");
    EXPECT_EQ(ts::error_code([&] { load_model_file(dir_ / "notes.txt"); }),
              "UNKNOWN_FORMAT");
}

TEST_F(LoaderTest, DetectsReferenceCyclesAcrossFiles) {
    put("a.devsc", "component b from \"b.devsc\"!");
    put("b.devsc", "component a from \"a.devsc\"!");
    EXPECT_EQ(ts::error_code([&] { load_model_file(dir_ / "a.devsc"); }), "INCLUDE_CYCLE");
}

TEST_F(LoaderTest, ChildFileErrorsNameTheChildFile) {
    put("broken.devsnl", "passivate in idle!");
    put("top.devsc", "component b from \"broken.devsnl\"!");
    try {
        load_model_file(dir_ / "top.devsc");
        FAIL() << "expected INVALID_MODEL";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), std::string("INVALID_MODEL"));
        ASSERT_FALSE(e.diagnostics().empty());
        EXPECT_NE(e.diagnostics().front().file.find("broken.devsnl"), std::string::npos);
    }
}
