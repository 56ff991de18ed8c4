#pragma once

// Bundled reference model: a flood monitoring composition. Two depth
// sensors report through a chain of store-and-forward mediators; the
// gateway raises an alarm when a forwarded reading is deeper than the
// flood limit. The texts ship as models/fms.devsc and models/mediator.devsnl
// and load to the same specs `fms_model()` builds here.

#include <string>

#include "sesim/devs/coupled.hpp"
#include "sesim/diagnostics.hpp"
#include "sesim/lang/compile.hpp"
#include "sesim/lang/coupled.hpp"
#include "sesim/lang/parser.hpp"

namespace sesim::models {

// Exact contents of the bundled models/mediator.devsnl file.
inline const std::string& mediator_devsnl_text() {
    static const std::string text = R"nl(A Distance has a value!
the range of Distance's value is Integer!
use distance with type Distance!

A Abscissa has a value!
the range of Abscissa's value is Integer!
use abscissa with type Abscissa!
A Ordinate has a value!
the range of Ordinate's value is Integer!
use ordinate with type Ordinate!
Coordinate has x and y!
the range of Coordinate's x is Abscissa!
the range of Coordinate's y is Ordinate!
use coordinate with type Coordinate!

A Depth has a value!
the range of Depth's value is Integer!
use depth with type Depth!
Measure has coordinate and depth!
the range of Measure's coordinate is Coordinate!
the range of Measure's depth is Depth!
use measure with type Measure!

accepts input on FromCoordinate with type Coordinate!
accepts input on ToCoordinate with type Coordinate!
accepts input on FromSensors with type Measure!
generates output on Measure with type Measure!

to start hold in s0 for time 1!
hold in s0 for time 1!
from s0 go to s1! //Unobservable
passivate in s1!
when in s1 and receive Coordinate go to s2!
passivate in s2!
when in s2 and receive Coordinate go to s3!
passivate in s3!
when in s3 and receive Measure go to s4!
hold in s4 for time 1!
after s4 output Measure!
from s4 go to s5!
hold in s5 for time 1!
from s5 go to s3! //Unobservable
)nl";
    return text;
}

// Exact contents of the bundled models/fms.devsc file.
inline const std::string& fms_devsc_text() {
    static const std::string text = R"dc(// Flood monitoring composition: two depth sensors report through a chain
// of store-and-forward mediators; the gateway raises an alarm when a
// forwarded reading is deeper than the flood limit. Every station first
// announces its position so the mediators can register both neighbours.

A Abscissa has a value!
the range of Abscissa's value is Integer!
A Ordinate has a value!
the range of Ordinate's value is Integer!
Coordinate has x and y!
the range of Coordinate's x is Abscissa!
the range of Coordinate's y is Ordinate!

A Depth has a value!
the range of Depth's value is Integer!
Measure has coordinate and depth!
the range of Measure's coordinate is Coordinate!
the range of Measure's depth is Depth!

generates output on Alarm with type Measure!

component sensor1 emits on Measure with type Measure every 5 starting at 6!
sensor1 announces on Position with type Coordinate at time 1!
sensor1 reading coordinate.x.value 3 and coordinate.y.value 4 and depth.value 1!
sensor1 reading coordinate.x.value 3 and coordinate.y.value 4 and depth.value 2!
sensor1 reading coordinate.x.value 3 and coordinate.y.value 4 and depth.value 3!
sensor1 reading coordinate.x.value 3 and coordinate.y.value 4 and depth.value 4!
sensor1 reading coordinate.x.value 3 and coordinate.y.value 4 and depth.value 5!
sensor1 reading coordinate.x.value 3 and coordinate.y.value 4 and depth.value 6!
sensor1 reading coordinate.x.value 3 and coordinate.y.value 4 and depth.value 7!
sensor1 reading coordinate.x.value 3 and coordinate.y.value 4 and depth.value 8!
sensor1 reading coordinate.x.value 3 and coordinate.y.value 4 and depth.value 9!
sensor1 reading coordinate.x.value 3 and coordinate.y.value 4 and depth.value 10!
sensor1 reading coordinate.x.value 3 and coordinate.y.value 4 and depth.value 11!

component sensor2 emits on Measure with type Measure every 5 starting at 9!
sensor2 announces on Position with type Coordinate at time 1!
sensor2 reading coordinate.x.value 8 and coordinate.y.value 2 and depth.value 1!
sensor2 reading coordinate.x.value 8 and coordinate.y.value 2 and depth.value 2!
sensor2 reading coordinate.x.value 8 and coordinate.y.value 2 and depth.value 3!
sensor2 reading coordinate.x.value 8 and coordinate.y.value 2 and depth.value 2!
sensor2 reading coordinate.x.value 8 and coordinate.y.value 2 and depth.value 1!

component mediator1 from "mediator.devsnl"!
component mediator2 from "mediator.devsnl"!

component gateway watches FromSensors with type Measure and raises Alarm when depth.value exceeds 10!
gateway announces on Position with type Coordinate at time 1!

couple sensor1.Position to mediator1.FromCoordinate!
couple sensor2.Position to mediator1.ToCoordinate!
couple sensor2.Position to mediator2.FromCoordinate!
couple gateway.Position to mediator2.ToCoordinate!
couple sensor1.Measure to mediator1.FromSensors!
couple mediator1.Measure to mediator2.FromSensors!
couple sensor2.Measure to mediator2.FromSensors!
couple mediator2.Measure to gateway.FromSensors!
couple gateway.Alarm to self.Alarm!
)dc";
    return text;
}

inline devs::AtomicSpec mediator_model() {
    return lang::compile(lang::parse(mediator_devsnl_text(), "models/mediator.devsnl").ast);
}

inline devs::CoupledSpec fms_model() {
    auto r = lang::parse_coupled(fms_devsc_text(), "models/fms.devsc");
    return lang::compile_coupled(r.ast, [](const std::string& file) {
        if (file != "mediator.devsnl")
            throw Error("FILE_NOT_FOUND", "the bundled composition only references "
                                          "mediator.devsnl, not '" + file + "'");
        return devs::Component(mediator_model());
    });
}

}  // namespace sesim::models
