/** WebSocket client for `marv-wire/1`; one JSON payload per text message. */
import type { ServerFrame, WireRequest } from "./protocol";

export interface ConnectionHandlers {
  onFrame: (frame: ServerFrame) => void;
  onClose?: () => void;
}

export class Connection {
  private socket: WebSocket;

  constructor(url: string, handlers: ConnectionHandlers) {
    this.socket = new WebSocket(url);
    this.socket.onmessage = (event) => {
      let frame: ServerFrame;
      try {
        frame = JSON.parse(event.data as string) as ServerFrame;
      } catch (error) {
        console.error("undecodable frame", error);
        return;
      }
      handlers.onFrame(frame);
    };
    this.socket.onclose = () => handlers.onClose?.();
  }

  send(request: WireRequest): void {
    this.socket.send(JSON.stringify(request));
  }

  close(): void {
    this.socket.close();
  }
}

export function defaultWireUrl(loc: Location = window.location): string {
  const scheme = loc.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${loc.host}/ws`;
}
