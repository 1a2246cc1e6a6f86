// Canvas drawing of a built scene.  Intentionally thin: everything
// interesting happens in scene.ts where it can be unit-tested.

import type { Scene } from "./scene.js";

export function drawScene(ctx: CanvasRenderingContext2D, scene: Scene): void {
  ctx.clearRect(0, 0, scene.width, scene.height);
  ctx.font = "11px sans-serif";
  for (const node of scene.nodes) {
    switch (node.kind) {
      case "area":
        ctx.strokeStyle = "#8aa";
        ctx.fillStyle = "rgba(140, 170, 170, 0.12)";
        ctx.fillRect(node.x, node.y, node.w, node.h);
        ctx.strokeRect(node.x, node.y, node.w, node.h);
        ctx.fillStyle = "#577";
        ctx.fillText(node.label, node.x + 4, node.y + 13);
        break;
      case "wall":
        ctx.strokeStyle = "#555";
        ctx.lineWidth = 3;
        ctx.beginPath();
        ctx.moveTo(node.x, node.y);
        ctx.lineTo(node.x2, node.y2);
        ctx.stroke();
        ctx.lineWidth = 1;
        break;
      case "entity":
        ctx.fillStyle = node.dimmed ? "rgba(60, 90, 160, 0.3)" : "#3c5aa0";
        ctx.fillRect(node.x - 5, node.y - 5, 10, 10);
        ctx.fillStyle = node.dimmed ? "#9ab" : "#234";
        ctx.fillText(node.label, node.x + 8, node.y + 4);
        break;
      case "agent":
        ctx.fillStyle = "#2a8f2a";
        ctx.beginPath();
        ctx.arc(node.x, node.y, 6, 0, Math.PI * 2);
        ctx.fill();
        ctx.fillStyle = "#163";
        ctx.fillText(node.label, node.x + 8, node.y + 4);
        break;
      case "popup": {
        const w = ctx.measureText(node.label).width + 10;
        ctx.fillStyle = "rgba(200, 40, 40, 0.75)";
        ctx.fillRect(node.x - w / 2, node.y - 14, w, 16);
        ctx.fillStyle = "#fff";
        ctx.fillText(node.label, node.x - w / 2 + 5, node.y - 2);
        break;
      }
    }
  }
}
