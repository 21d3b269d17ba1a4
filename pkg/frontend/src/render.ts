/** Top-down canvas renderer.
 *
 * World axes: y runs along the road (drawn left to right, camera following
 * the human car), x runs across the lanes (drawn top to bottom). Everything
 * drawn comes from the view model's server-provided state; rendering never
 * mutates it. The drawing surface is typed structurally so tests can pass a
 * recording fake instead of a real CanvasRenderingContext2D.
 */
import type { ViewModel } from "./viewmodel.js";

export interface DrawSurface {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  save(): void;
  restore(): void;
  setLineDash(segments: number[]): void;
}

export interface RenderOptions {
  width: number;
  height: number;
  laneWidthM?: number;
  numLanes?: number;
  carLengthM?: number;
  carWidthM?: number;
  pixelsPerMeter?: number;
  indicatorBlinkMs?: number;
}

const DEFAULTS = {
  laneWidthM: 4,
  numLanes: 2,
  carLengthM: 5,
  carWidthM: 2,
  pixelsPerMeter: 7,
  indicatorBlinkMs: 350,
};

export function hudDistanceText(distanceM: number): string {
  return `${Math.floor(distanceM)} m`;
}

export function render(view: ViewModel, ctx: DrawSurface,
                       opts: RenderOptions, nowMs: number): void {
  const o = { ...DEFAULTS, ...opts };
  ctx.save();
  ctx.fillStyle = "#20242b";
  ctx.fillRect(0, 0, o.width, o.height);

  if (view.status === "connecting" || view.trial === null) {
    drawCenteredText(ctx, "waiting for session...", o);
    ctx.restore();
    return;
  }
  if (view.status === "lost") {
    drawCenteredText(ctx, "connection lost - reload to reconnect", o);
    ctx.restore();
    return;
  }

  const human = view.carPose("human", nowMs);
  const robot = view.carPose("robot", nowMs);
  if (human === null || robot === null) {
    drawCenteredText(ctx, "waiting for first tick...", o);
    ctx.restore();
    return;
  }

  const ppm = o.pixelsPerMeter;
  const roadHeight = o.numLanes * o.laneWidthM * ppm;
  const roadTop = (o.height - roadHeight) / 2;
  // camera keeps the human car a third of the way across the screen
  const cameraY = human.y - (o.width / ppm) / 3;
  const toScreenX = (worldY: number) => (worldY - cameraY) * ppm;
  const toScreenY = (worldX: number) => roadTop + worldX * ppm;

  // asphalt, edges, dashed divider
  ctx.fillStyle = "#3a3f46";
  ctx.fillRect(0, roadTop, o.width, roadHeight);
  ctx.strokeStyle = "#e8e8e8";
  ctx.lineWidth = 2;
  ctx.setLineDash([]);
  for (const edgeLane of [0, o.numLanes]) {
    const y = toScreenY(edgeLane * o.laneWidthM);
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(o.width, y);
    ctx.stroke();
  }
  ctx.setLineDash([14, 12]);
  for (let lane = 1; lane < o.numLanes; lane++) {
    const y = toScreenY(lane * o.laneWidthM);
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(o.width, y);
    ctx.stroke();
  }
  ctx.setLineDash([]);

  // checkered finish line at the road end
  const finishX = toScreenX(view.trial.road_length);
  if (finishX >= 0 && finishX <= o.width) {
    const cell = 8;
    for (let i = 0; i * cell < roadHeight; i++) {
      ctx.fillStyle = i % 2 === 0 ? "#f0f0f0" : "#111111";
      ctx.fillRect(finishX, roadTop + i * cell, cell,
                   Math.min(cell, roadHeight - i * cell));
    }
  }

  // cars (rectangles, lengths along the road)
  const carL = o.carLengthM * ppm;
  const carW = o.carWidthM * ppm;
  const colors = view.trial.colors;
  for (const [pose, color, isRobot] of [
    [human, colors.human, false],
    [robot, colors.robot, true],
  ] as const) {
    const cx = toScreenX(pose.y);
    const cy = toScreenY(pose.x);
    ctx.fillStyle = color;
    ctx.fillRect(cx - carL / 2, cy - carW / 2, carL, carW);
    ctx.strokeStyle = "#101010";
    ctx.lineWidth = 1;
    ctx.strokeRect(cx - carL / 2, cy - carW / 2, carL, carW);
    if (isRobot) {
      // blinking indicator on the side of the AV's goal lane
      const blinkOn = Math.floor(nowMs / o.indicatorBlinkMs) % 2 === 0;
      if (blinkOn) {
        const goalLane = view.latestTick
          ? view.latestTick.av_indicator_lane
          : view.trial.av_indicator_lane;
        const towardLane0 = goalLane === 0;
        const iy = cy + (towardLane0 ? -carW / 2 : carW / 2);
        ctx.fillStyle = "#ffb300";
        ctx.fillRect(cx - carL / 2, iy - 2, 6, 4);
        ctx.fillRect(cx + carL / 2 - 6, iy - 2, 6, 4);
      }
    }
  }

  // HUD: distance remaining, goal lane, speed
  const remaining = view.distanceRemaining();
  ctx.fillStyle = "#ffffff";
  ctx.font = "16px monospace";
  if (remaining !== null) {
    ctx.fillText(hudDistanceText(remaining), 12, 22);
  }
  const goal = view.trial.human_goal_lane;
  ctx.fillText(`your goal: ${goal === 0 ? "upper" : "lower"} lane`, 12, 42);
  ctx.fillText(`${human.v.toFixed(1)} m/s`, 12, 62);

  if (view.status === "trial_over" && view.outcome !== null) {
    const verdict = view.outcome.collision
      ? "collision"
      : view.outcome.merged_human
        ? "merged!"
        : "road ended before you merged";
    drawCenteredText(ctx, `trial over: ${verdict}`, o);
  }
  ctx.restore();
}

function drawCenteredText(ctx: DrawSurface, text: string,
                          o: { width: number; height: number }): void {
  ctx.fillStyle = "#dddddd";
  ctx.font = "20px sans-serif";
  ctx.fillText(text, o.width / 2 - text.length * 5, o.height / 2);
}
